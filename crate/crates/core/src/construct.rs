//! Generators: the degree threshold, the tightness construction, canonical
//! `H_ext`, planted pattern link graphs and random instances.

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{binomial, Hypergraph, Matching};
use crate::link::{bit, cover_mask, GroupElement, LinkGraph, PatternKind};
use crate::rng::{self, Rng};

fn check_order(n: usize) -> Result<()> {
    if !n.is_multiple_of(4) {
        return Err(Error::Indivisible { n, by: 4 });
    }
    if n < 8 {
        return Err(Error::InvalidHypergraph(format!("need n >= 8, got {n}")));
    }
    Ok(())
}

/// `C(n-1, 3) - C(3n/4, 3) + 1`.
pub fn threshold(n: usize) -> Result<u64> {
    check_order(n)?;
    let n = n as u64;
    let value = binomial(n - 1, 3) - binomial(3 * n / 4, 3) + 1;
    u64::try_from(value).map_err(|_| Error::TooLarge(format!("threshold({n})")))
}

/// The two sides `(A, B)` of the tightness construction: `|A| = n/4 - 1`.
pub fn extremal_parts(n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    check_order(n)?;
    let a = n / 4 - 1;
    Ok(((0..a).collect(), (a..n).collect()))
}

/// All 4-sets meeting `A = {0, .., n/4 - 2}`.
pub fn extremal_construction(n: usize) -> Result<Hypergraph> {
    let (a, _) = extremal_parts(n)?;
    let a = a.len();
    let flat = (0..n)
        .combinations(4)
        .filter(|e| e[0] < a)
        .flatten()
        .collect();
    Hypergraph::from_sorted_flat(n, 4, flat)
}

/// `H_ext` covered by `(a_0, b_0, c_0)`.
pub fn h_ext_canonical() -> LinkGraph {
    LinkGraph(cover_mask(0, 0, 0))
}

/// How to populate the bits a planted pattern does not constrain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fill {
    Zero,
    Full,
    /// Each free bit independently with this probability.
    Random(f64),
}

/// A link graph containing the pattern `kind`.
///
/// Pairs `(x, x)` on side `Q2 x Q3` get exactly the required degrees; bits
/// through other pairs are filled per `fill`, and the whole graph is then
/// moved by a random symmetry.
pub fn pattern_witness(kind: PatternKind, fill: Fill, seed: u64) -> LinkGraph {
    let mut rng = rng::substream(seed, "pattern");
    let need = kind.requirement();
    let mut mask = 0u64;
    for j in 0..4 {
        for k in 0..4 {
            let planted = j == k && j < need.len();
            for i in 0..4 {
                let set = if planted {
                    i < need[j] as usize
                } else {
                    match fill {
                        Fill::Zero => false,
                        Fill::Full => true,
                        Fill::Random(p) => rng.gen_bool(p),
                    }
                };
                if set {
                    mask |= 1 << bit(i, j, k);
                }
            }
        }
    }
    LinkGraph(mask).apply(&GroupElement::random(&mut rng))
}

/// Uniform over masks with at least `min_edges` bits.
pub fn random_link_graph(min_edges: u32, rng: &mut Rng) -> LinkGraph {
    let min_edges = min_edges.min(64) as usize;
    let weights: Vec<f64> = (min_edges..=64)
        .map(|k| binomial(64, k as u64) as f64)
        .collect();
    let k = min_edges
        + WeightedIndex::new(&weights)
            .expect("positive weights")
            .sample(rng);
    let mask = index::sample(rng, 64, k)
        .into_iter()
        .fold(0u64, |m, b| m | 1 << b);
    LinkGraph(mask)
}

/// Random 4-graph with `delta_1 >= target`.
///
/// Every 4-set is kept with probability `target / C(n-1, 3)`; vertices still
/// short of `target` then receive random incident edges. The repair step
/// biases the result towards deficient vertices.
pub fn random_dense_hypergraph(n: usize, target: u64, seed: u64) -> Result<Hypergraph> {
    if n < 4 {
        return Err(Error::InvalidHypergraph(format!("need n >= 4, got {n}")));
    }
    let max = binomial(n as u64 - 1, 3) as u64;
    if target > max {
        return Err(Error::Infeasible { target, max });
    }
    let mut rng = rng::substream(seed, "random-dense");
    let p = target as f64 / max as f64;
    let mut set: HashSet<[usize; 4]> = HashSet::new();
    let mut deg = vec![0u64; n];
    for e in (0..n).combinations(4) {
        if p >= 1.0 || rng.gen_bool(p) {
            e.iter().for_each(|&v| deg[v] += 1);
            set.insert([e[0], e[1], e[2], e[3]]);
        }
    }
    let mut others: Vec<usize> = Vec::with_capacity(n - 1);
    for v in 0..n {
        others.clear();
        others.extend((0..n).filter(|&u| u != v));
        while deg[v] < target {
            let mut e = [v, 0, 0, 0];
            for (slot, &u) in e[1..].iter_mut().zip(others.choose_multiple(&mut rng, 3)) {
                *slot = u;
            }
            e.sort_unstable();
            if set.insert(e) {
                e.iter().for_each(|&u| deg[u] += 1);
            }
        }
    }
    let mut edges: Vec<[usize; 4]> = set.into_iter().collect();
    edges.sort_unstable();
    Hypergraph::from_sorted_flat(n, 4, edges.into_iter().flatten().collect())
}

/// A random perfect matching plus every other 4-set at rate `noise`.
pub fn planted_pm_instance(n: usize, noise: f64, seed: u64) -> Result<(Hypergraph, Matching)> {
    if !n.is_multiple_of(4) || n == 0 {
        return Err(Error::Indivisible { n, by: 4 });
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidHypergraph(format!(
            "noise {noise} outside [0, 1]"
        )));
    }
    let mut rng = rng::substream(seed, "planted-pm");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let matching = Matching::new(order.chunks(4));
    let planted: HashSet<&[usize]> = matching.edges().iter().map(Vec::as_slice).collect();
    let flat = (0..n)
        .combinations(4)
        .filter(|e| planted.contains(e.as_slice()) || (noise > 0.0 && rng.gen_bool(noise)))
        .flatten()
        .collect();
    let h = Hypergraph::from_sorted_flat(n, 4, flat)?;
    Ok((h, matching))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecipeKind {
    Extremal,
    RandomDense,
    PlantedPm,
    Pattern,
    Hext,
    Link,
}

/// Everything needed to regenerate an instance; written next to each output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecipe {
    pub kind: RecipeKind,
    pub n: usize,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
}

/// A generated instance: a hypergraph or a link graph.
#[derive(Debug, Clone)]
pub enum Instance {
    Hypergraph(Hypergraph),
    Planted(Hypergraph, Matching),
    Link(LinkGraph),
}

impl InstanceRecipe {
    pub fn new(kind: RecipeKind, n: usize, seed: u64) -> Self {
        InstanceRecipe {
            kind,
            n,
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    fn param<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.params
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("bad value {v:?} for {key}"),
                })
            })
            .transpose()
    }

    pub fn build(&self) -> Result<Instance> {
        match self.kind {
            RecipeKind::Extremal => Ok(Instance::Hypergraph(extremal_construction(self.n)?)),
            RecipeKind::RandomDense => {
                let target = match self.param::<u64>("min_deg")? {
                    Some(t) => t,
                    None => threshold(self.n)?,
                };
                Ok(Instance::Hypergraph(random_dense_hypergraph(
                    self.n, target, self.seed,
                )?))
            }
            RecipeKind::PlantedPm => {
                let noise = self.param::<f64>("noise")?.unwrap_or(0.0);
                let (h, m) = planted_pm_instance(self.n, noise, self.seed)?;
                Ok(Instance::Planted(h, m))
            }
            RecipeKind::Pattern => {
                let kind = self
                    .param::<PatternKind>("pattern")?
                    .unwrap_or(PatternKind::H432);
                let fill = match self.params.get("fill").map(String::as_str) {
                    Some("zero") => Fill::Zero,
                    Some("full") => Fill::Full,
                    _ => Fill::Random(self.param::<f64>("fill_rate")?.unwrap_or(0.5)),
                };
                Ok(Instance::Link(pattern_witness(kind, fill, self.seed)))
            }
            RecipeKind::Hext => Ok(Instance::Link(h_ext_canonical())),
            RecipeKind::Link => {
                let min = self.param::<u32>("min_edges")?.unwrap_or(37);
                let mut rng = rng::substream(self.seed, "link");
                Ok(Instance::Link(random_link_graph(min, &mut rng)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::max_matching_exact;

    #[test]
    fn threshold_values() {
        assert_eq!(threshold(8).unwrap(), 16);
        assert_eq!(threshold(12).unwrap(), 82);
        assert_eq!(threshold(16).unwrap(), 236);
        assert_eq!(threshold(10), Err(Error::Indivisible { n: 10, by: 4 }));
    }

    #[test]
    fn extremal_eight() {
        let h = extremal_construction(8).unwrap();
        assert_eq!(h.edge_count(), 35);
        assert_eq!(h.min_degree(1).unwrap(), 15);
        let r = max_matching_exact(&h, 1 << 20).unwrap();
        assert_eq!((r.matching.len(), r.optimal), (1, true));
    }

    #[test]
    fn extremal_sixteen_edge_count() {
        // 4-sets of 16 vertices minus those inside the 13-vertex side
        let h = extremal_construction(16).unwrap();
        let brute = (0..16usize)
            .combinations(4)
            .filter(|e| e.iter().any(|&v| v < 3))
            .count();
        assert_eq!(h.edge_count(), brute);
        assert_eq!(brute, 1105);
    }

    #[test]
    fn hext_shape() {
        let l = h_ext_canonical();
        assert_eq!(l.edge_count(), 37);
        assert!(l.perfect_matching().is_none());
        assert_eq!(l.is_ext(), Some((0, 0, 0)));
    }

    #[test]
    fn pattern_witnesses_are_detected() {
        for kind in PatternKind::ALL {
            for seed in 0..20 {
                for fill in [Fill::Zero, Fill::Full, Fill::Random(0.3)] {
                    let l = pattern_witness(kind, fill, seed);
                    assert!(l.detect_pattern(kind).is_some(), "{kind:?} {fill:?} {seed}");
                }
            }
        }
        let sum: u8 = PatternKind::H3321.requirement().iter().sum();
        assert_eq!(
            pattern_witness(PatternKind::H3321, Fill::Zero, 5).edge_count(),
            u32::from(sum)
        );
    }

    #[test]
    fn random_link_graphs() {
        let mut r = rng::substream(1, "t");
        assert_eq!(random_link_graph(64, &mut r), LinkGraph::FULL);
        for _ in 0..100 {
            assert!(random_link_graph(37, &mut r).edge_count() >= 37);
        }
        let a = random_link_graph(40, &mut rng::substream(9, "t"));
        let b = random_link_graph(40, &mut rng::substream(9, "t"));
        assert_eq!(a, b);
    }

    #[test]
    fn random_dense_examples() {
        let full = random_dense_hypergraph(9, 56, 1).unwrap();
        assert_eq!(full, Hypergraph::complete(9, 4).unwrap());
        let empty = random_dense_hypergraph(9, 0, 1).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let h = random_dense_hypergraph(16, 236, 4).unwrap();
        assert!(h.min_degree(1).unwrap() >= 236);
        assert_eq!(h, random_dense_hypergraph(16, 236, 4).unwrap());
        assert_eq!(
            random_dense_hypergraph(8, 36, 0),
            Err(Error::Infeasible {
                target: 36,
                max: 35
            })
        );
    }

    #[test]
    fn planted_examples() {
        let (h, m) = planted_pm_instance(12, 0.0, 3).unwrap();
        assert_eq!(h.edge_count(), 3);
        assert!(h.validate_matching(&m).perfect);
        let (h, m) = planted_pm_instance(12, 1.0, 3).unwrap();
        assert_eq!(h, Hypergraph::complete(12, 4).unwrap());
        assert!(h.validate_matching(&m).perfect);
        let (h, m) = planted_pm_instance(24, 0.1, 8).unwrap();
        assert!(h.validate_matching(&m).perfect);
    }

    #[test]
    fn recipes_round_trip_through_json() {
        let r = InstanceRecipe::new(RecipeKind::RandomDense, 12, 7).with("min_deg", 82);
        let json = serde_json::to_string(&r).unwrap();
        let back: InstanceRecipe = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let Instance::Hypergraph(h) = back.build().unwrap() else {
            panic!("expected a hypergraph")
        };
        assert!(h.min_degree(1).unwrap() >= 82);
    }
}
