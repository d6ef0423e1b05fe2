//! Absorbing matchings found by explicit search.
//!
//! A vertex set `S` absorbs a 4-set `W` when both `H|_S` and `H|_{S ∪ W}`
//! have perfect matchings. The base matching is a union of such blocks.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Matching};
use crate::rng;
use crate::solve::has_perfect_matching;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbConfig {
    /// Vertices per absorbing block; 12 or 16.
    pub set_size: usize,
    /// Cap on the number of base edges.
    pub max_edges: usize,
    /// Number of sampled 4-sets.
    pub trials: usize,
    /// Random candidate blocks tried per sampled 4-set.
    pub search_tries: usize,
    pub seed: u64,
}

impl Default for AbsorbConfig {
    fn default() -> Self {
        AbsorbConfig {
            set_size: 12,
            max_edges: 6,
            trials: 200,
            search_tries: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbingBlock {
    pub vertices: Vec<usize>,
    pub matching: Matching,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub block: usize,
    /// Perfect matching of the block together with the 4-set.
    pub replacement: Matching,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorberStats {
    pub trials: usize,
    pub registered: usize,
    pub fresh_blocks: usize,
    pub reused_blocks: usize,
}

impl AbsorberStats {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.registered as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbingMatching {
    pub blocks: Vec<AbsorbingBlock>,
    pub registry: BTreeMap<Vec<usize>, Registration>,
    /// Registered 4-sets in draw order, repeats included.
    pub drawn: Vec<Vec<usize>>,
    pub stats: AbsorberStats,
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Perfect matching of `H|_set`, in original labels.
pub(crate) fn pm_on(h: &Hypergraph, set: &[usize]) -> Option<Matching> {
    let set = sorted(set);
    if set.is_empty() {
        return Some(Matching::default());
    }
    if !set.len().is_multiple_of(h.r()) || set.len() < h.r() {
        return None;
    }
    let sub = h.induce(&set);
    let m = has_perfect_matching(&sub).ok()??;
    Some(Matching::new(
        m.edges()
            .iter()
            .map(|e| e.iter().map(|&i| set[i]).collect::<Vec<_>>()),
    ))
}

/// Both perfect matchings witnessing that `s` absorbs `w`.
pub fn absorbing_pair(
    h: &Hypergraph,
    s: &[usize],
    w: &[usize],
) -> Result<Option<(Matching, Matching)>> {
    if s.iter().any(|v| w.contains(v)) {
        return Err(Error::NotDisjoint);
    }
    if !s.len().is_multiple_of(4) {
        return Err(Error::Indivisible { n: s.len(), by: 4 });
    }
    let Some(inner) = pm_on(h, s) else {
        return Ok(None);
    };
    let union: Vec<usize> = s.iter().chain(w).copied().collect();
    Ok(pm_on(h, &union).map(|outer| (inner, outer)))
}

pub fn is_absorbing_set(h: &Hypergraph, s: &[usize], w: &[usize]) -> Result<bool> {
    Ok(absorbing_pair(h, s, w)?.is_some())
}

impl AbsorbingMatching {
    pub fn base(&self) -> Matching {
        let mut m = Matching::default();
        for b in &self.blocks {
            m.extend(&b.matching);
        }
        m
    }

    pub fn base_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .blocks
            .iter()
            .flat_map(|b| b.vertices.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }

    /// Wraps given blocks, each of which must have a perfect matching in `h`.
    pub fn from_blocks(h: &Hypergraph, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut out = AbsorbingMatching::default();
        for s in blocks {
            let m = pm_on(h, s).ok_or_else(|| {
                Error::InvalidHypergraph(format!("block {s:?} has no perfect matching"))
            })?;
            out.blocks.push(AbsorbingBlock {
                vertices: sorted(s),
                matching: m,
            });
        }
        Ok(out)
    }
}

/// Samples 4-sets outside the base and registers an absorbing block for each.
pub fn build_absorbing_matching(h: &Hypergraph, cfg: &AbsorbConfig) -> Result<AbsorbingMatching> {
    if !cfg.set_size.is_multiple_of(4) || cfg.set_size == 0 {
        return Err(Error::Indivisible {
            n: cfg.set_size,
            by: 4,
        });
    }
    let n = h.n();
    let mut am = AbsorbingMatching::default();
    let mut rng = rng::substream(cfg.seed, "absorb");
    let mut in_base = vec![false; n];
    let per_block = cfg.set_size / 4;
    for _ in 0..cfg.trials {
        let free: Vec<usize> = (0..n).filter(|&v| !in_base[v]).collect();
        if free.len() < 4 {
            break;
        }
        am.stats.trials += 1;
        let w = sorted(
            &index::sample(&mut rng, free.len(), 4)
                .into_iter()
                .map(|i| free[i])
                .collect::<Vec<_>>(),
        );
        let mut registered = false;
        let room = am.blocks.len() * per_block + per_block <= cfg.max_edges;
        // a block must stay clear of every set it may later absorb
        let pool: Vec<usize> = free
            .iter()
            .copied()
            .filter(|v| !w.contains(v) && !am.registry.keys().any(|k| k.contains(v)))
            .collect();
        if room && pool.len() >= cfg.set_size {
            for _ in 0..cfg.search_tries {
                let s = sorted(
                    &pool
                        .choose_multiple(&mut rng, cfg.set_size)
                        .copied()
                        .collect::<Vec<_>>(),
                );
                if let Some((inner, outer)) = absorbing_pair(h, &s, &w)? {
                    s.iter().for_each(|&v| in_base[v] = true);
                    am.registry.insert(
                        w.clone(),
                        Registration {
                            block: am.blocks.len(),
                            replacement: outer,
                        },
                    );
                    am.blocks.push(AbsorbingBlock {
                        vertices: s,
                        matching: inner,
                    });
                    am.stats.fresh_blocks += 1;
                    registered = true;
                    break;
                }
            }
        }
        if !registered {
            for (i, b) in am.blocks.iter().enumerate() {
                let union: Vec<usize> = b.vertices.iter().chain(&w).copied().collect();
                if let Some(outer) = pm_on(h, &union) {
                    am.registry.insert(
                        w.clone(),
                        Registration {
                            block: i,
                            replacement: outer,
                        },
                    );
                    am.stats.reused_blocks += 1;
                    registered = true;
                    break;
                }
            }
        }
        if registered {
            am.stats.registered += 1;
            am.drawn.push(w);
        }
    }
    Ok(am)
}

/// Re-covers `V(base) ∪ V(partial) ∪ W` exactly, one 4-set of `W` per block.
pub fn absorb(
    h: &Hypergraph,
    am: &AbsorbingMatching,
    partial: &Matching,
    w: &[usize],
) -> Result<Matching> {
    let w = sorted(w);
    if !w.len().is_multiple_of(4) {
        return Err(Error::Indivisible { n: w.len(), by: 4 });
    }
    let mut taken = vec![false; h.n()];
    for &v in am.base_vertices().iter().chain(partial.vertices().iter()) {
        if v >= h.n() {
            return Err(Error::InvalidVertex {
                vertex: v,
                n: h.n(),
            });
        }
        if taken[v] {
            return Err(Error::NotDisjoint);
        }
        taken[v] = true;
    }
    if w.iter().any(|&v| v >= h.n() || taken[v]) || w.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::NotDisjoint);
    }
    let mut replaced: Vec<Option<Matching>> = vec![None; am.blocks.len()];
    for chunk in w.chunks(4) {
        let registered = am
            .registry
            .get(chunk)
            .filter(|reg| replaced[reg.block].is_none())
            .map(|reg| (reg.block, reg.replacement.clone()));
        let hit = registered.or_else(|| {
            am.blocks.iter().enumerate().find_map(|(i, b)| {
                if replaced[i].is_some() {
                    return None;
                }
                let union: Vec<usize> = b.vertices.iter().chain(chunk).copied().collect();
                pm_on(h, &union).map(|m| (i, m))
            })
        });
        let Some((i, m)) = hit else {
            return Err(Error::AbsorptionFailed(chunk.to_vec()));
        };
        replaced[i] = Some(m);
    }
    let mut out = partial.clone();
    for (b, r) in am.blocks.iter().zip(&replaced) {
        out.extend(r.as_ref().unwrap_or(&b.matching));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::extremal_construction;

    #[test]
    fn absorbing_set_examples() {
        let k = Hypergraph::complete(20, 4).unwrap();
        let s: Vec<usize> = (0..12).collect();
        assert!(is_absorbing_set(&k, &s, &[12, 13, 14, 15]).unwrap());
        let e = Hypergraph::empty(20, 4).unwrap();
        assert!(!is_absorbing_set(&e, &s, &[12, 13, 14, 15]).unwrap());
        let x = extremal_construction(16).unwrap();
        let in_b: Vec<usize> = (3..15).collect();
        assert!(!is_absorbing_set(&x, &in_b, &[0, 1, 2, 15]).unwrap());
        assert_eq!(
            is_absorbing_set(&k, &s, &[0, 13, 14, 15]),
            Err(Error::NotDisjoint)
        );
    }

    #[test]
    fn complete_graph_registers_everything() {
        let k = Hypergraph::complete(24, 4).unwrap();
        let cfg = AbsorbConfig {
            trials: 20,
            ..AbsorbConfig::default()
        };
        let am = build_absorbing_matching(&k, &cfg).unwrap();
        assert_eq!(am.stats.registered, am.stats.trials);
        assert_eq!(am.drawn.len(), am.stats.registered);
        assert!(am.base().len() <= cfg.max_edges);
        let base = am.base_vertices();
        assert!(am.registry.keys().flatten().all(|v| !base.contains(v)));
        assert_eq!(am, build_absorbing_matching(&k, &cfg).unwrap());
    }

    #[test]
    fn edgeless_graph_registers_nothing() {
        let e = Hypergraph::empty(20, 4).unwrap();
        let cfg = AbsorbConfig {
            trials: 5,
            search_tries: 4,
            ..AbsorbConfig::default()
        };
        let am = build_absorbing_matching(&e, &cfg).unwrap();
        assert!(am.base().is_empty());
        assert_eq!(am.stats.rate(), 0.0);
    }

    #[test]
    fn absorb_in_complete_graph() {
        let k = Hypergraph::complete(24, 4).unwrap();
        let am = AbsorbingMatching::from_blocks(&k, &[(0..12).collect()]).unwrap();
        let partial = Matching::new([[12, 13, 14, 15], [16, 17, 18, 19]]);
        let out = absorb(&k, &am, &partial, &[20, 21, 22, 23]).unwrap();
        assert!(k.validate_matching(&out).perfect);
        let same = absorb(&k, &am, &partial, &[]).unwrap();
        assert_eq!(same.len(), 5);
        assert_eq!(
            absorb(&k, &am, &partial, &[0, 21, 22, 23]),
            Err(Error::NotDisjoint)
        );
    }

    #[test]
    fn absorb_reports_failure() {
        let x = extremal_construction(16).unwrap();
        let am = AbsorbingMatching::default();
        assert_eq!(
            absorb(&x, &am, &Matching::default(), &[12, 13, 14, 15]),
            Err(Error::AbsorptionFailed(vec![12, 13, 14, 15]))
        );
    }
}
