//! Dense-substructure extraction: dense rows of a bipartite incidence, common
//! neighbourhood buckets, and complete balanced multipartite blocks.

use std::collections::{BTreeMap, HashSet};

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{check_disjoint, Density, DensityKind, Hypergraph};

/// Skip the bucket route when the auxiliary incidence would exceed this many cells.
const PIGEONHOLE_CELL_LIMIT: usize = 1 << 26;

/// Bipartite incidence: one bit row over `0..left` per right item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    left: usize,
    rows: Vec<FixedBitSet>,
}

impl Incidence {
    pub fn new(left: usize, rows: Vec<FixedBitSet>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.grow(left);
                r
            })
            .collect();
        Incidence { left, rows }
    }

    pub fn from_fn(left: usize, right: usize, adjacent: impl Fn(usize, usize) -> bool) -> Self {
        let rows = (0..right)
            .map(|q| {
                let mut row = FixedBitSet::with_capacity(left);
                for l in 0..left {
                    if adjacent(l, q) {
                        row.insert(l);
                    }
                }
                row
            })
            .collect();
        Incidence { left, rows }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, q: usize) -> &FixedBitSet {
        &self.rows[q]
    }

    pub fn density(&self) -> Result<Density> {
        let cells = (self.left * self.rows.len()) as u64;
        if cells == 0 {
            return Err(Error::EmptyInput);
        }
        let ones: usize = self.rows.iter().map(|r| r.count_ones(..)).sum();
        Ok(Ratio::new(ones as u64, cells))
    }
}

/// Right items of degree at least `eta |left|`; needs density at least `2 eta`.
pub fn dense_side(g: &Incidence, eta: Density) -> Result<Vec<usize>> {
    let d = g.density()?;
    let need = eta * Ratio::from_integer(2);
    if d < need {
        return Err(Error::InsufficientDensity {
            found: d.to_string(),
            required: need.to_string(),
        });
    }
    let bar = eta * Ratio::from_integer(g.left as u64);
    Ok((0..g.right())
        .filter(|&q| Ratio::from_integer(g.rows[q].count_ones(..) as u64) >= bar)
        .collect())
}

/// A complete bipartite piece: shared neighbourhood and the right items having it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Buckets of right items grouped by exact neighbourhood, largest first; ties
/// go to the numerically smaller neighbourhood mask.
pub fn neighbourhood_buckets(g: &Incidence, items: &[usize]) -> Vec<Bucket> {
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for &q in items {
        let ones: Vec<usize> = g.rows[q].ones().collect();
        groups.entry(ones).or_default().push(q);
    }
    let mut buckets: Vec<(Vec<usize>, Bucket)> = groups
        .into_iter()
        .map(|(left, right)| {
            // descending bit list orders masks by numeric value
            let key: Vec<usize> = left.iter().rev().copied().collect();
            (key, Bucket { left, right })
        })
        .collect();
    buckets.sort_by(|(ka, a), (kb, b)| b.right.len().cmp(&a.right.len()).then(ka.cmp(kb)));
    buckets.into_iter().map(|(_, b)| b).collect()
}

/// The most populous neighbourhood bucket over all right items.
pub fn common_neighborhood_bucket(g: &Incidence) -> Result<Bucket> {
    let all: Vec<usize> = (0..g.right()).collect();
    neighbourhood_buckets(g, &all)
        .into_iter()
        .next()
        .ok_or(Error::EmptyInput)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    A,
    B,
    C,
    Z,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionPath {
    /// Dense rows, then a common neighbourhood bucket, then a block inside it.
    Pigeonhole,
    /// Direct bounded backtracking in the host.
    Backtrack,
}

/// Complete multipartite block with one class per role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultipartiteWitness {
    pub classes: Vec<Vec<usize>>,
    pub roles: Vec<Role>,
    pub path: ExtractionPath,
}

impl MultipartiteWitness {
    pub fn vertices(&self) -> Vec<usize> {
        self.classes
            .iter()
            .flatten()
            .copied()
            .sorted_unstable()
            .collect()
    }

    pub fn class_size(&self) -> usize {
        self.classes.first().map_or(0, Vec::len)
    }

    pub fn is_balanced(&self) -> bool {
        self.classes.iter().map(Vec::len).all_equal()
    }

    /// Disjointness, balance and an exhaustive transversal check.
    pub fn verify(&self, h: &Hypergraph) -> bool {
        let refs: Vec<&[usize]> = self.classes.iter().map(Vec::as_slice).collect();
        self.classes.len() == h.r()
            && self.is_balanced()
            && self.class_size() > 0
            && check_disjoint(&refs, h.n()).is_ok()
            && is_complete(h, &refs)
    }

    /// Transversal edges `(c_0[i], .., c_3[i])`: `l` disjoint edges.
    pub fn diagonal_edges(&self) -> Vec<Vec<usize>> {
        (0..self.class_size())
            .map(|i| self.classes.iter().map(|c| c[i]).collect())
            .collect()
    }
}

/// Every transversal tuple of `classes` is an edge.
pub fn is_complete(h: &Hypergraph, classes: &[&[usize]]) -> bool {
    classes
        .iter()
        .map(|c| c.iter())
        .multi_cartesian_product()
        .all(|t| h.contains(&t.into_iter().copied().collect::<Vec<_>>()))
}

/// Backtracking search for `k` classes of size `l`, class `c` drawn from
/// `pools[c]`, such that every transversal tuple satisfies `is_edge`.
/// `seeds` lists candidate transversal tuples as vertex sets.
struct BlockSearch<'a, F> {
    pools: Vec<&'a [usize]>,
    l: usize,
    is_edge: F,
    budget: u64,
    nodes: u64,
    chosen: Vec<Vec<usize>>,
    used: HashSet<usize>,
}

impl<F: Fn(&[usize]) -> bool> BlockSearch<'_, F> {
    fn same_pool(&self, c: usize) -> bool {
        c > 0 && self.pools[c] == self.pools[c - 1]
    }

    fn in_pool(&self, c: usize, v: usize) -> bool {
        self.pools[c].binary_search(&v).is_ok()
    }

    fn compatible(&self, c: usize, v: usize) -> bool {
        let others: Vec<&Vec<usize>> = (0..self.pools.len())
            .filter(|&d| d != c)
            .map(|d| &self.chosen[d])
            .collect();
        if others.iter().any(|o| o.is_empty()) {
            return true;
        }
        let mut tuple = vec![0; self.pools.len()];
        others
            .iter()
            .map(|o| o.iter())
            .multi_cartesian_product()
            .all(|rest| {
                let mut it = rest.into_iter();
                for (d, slot) in tuple.iter_mut().enumerate() {
                    *slot = if d == c { v } else { *it.next().unwrap() };
                }
                (self.is_edge)(&tuple)
            })
    }

    fn run_seeds(&mut self, seeds: &[Vec<usize>]) -> bool {
        let k = self.pools.len();
        for seed in seeds {
            for perm in seed.iter().copied().permutations(k) {
                if self.nodes >= self.budget {
                    return false;
                }
                let ok = (0..k).all(|c| {
                    self.in_pool(c, perm[c]) && (!self.same_pool(c) || perm[c - 1] < perm[c])
                });
                if !ok || !(self.is_edge)(&perm) {
                    continue;
                }
                self.nodes += 1;
                for (c, &v) in perm.iter().enumerate() {
                    self.chosen[c].push(v);
                    self.used.insert(v);
                }
                if self.extend(1, 0) {
                    return true;
                }
                for (c, v) in perm.iter().enumerate() {
                    self.chosen[c].clear();
                    self.used.remove(v);
                }
            }
        }
        false
    }

    fn extend(&mut self, round: usize, c: usize) -> bool {
        if round == self.l {
            return true;
        }
        let (next_round, next_c) = if c + 1 == self.pools.len() {
            (round + 1, 0)
        } else {
            (round, c + 1)
        };
        let last = *self.chosen[c].last().unwrap();
        let pool = self.pools[c];
        let start = pool.partition_point(|&v| v <= last);
        for &v in &pool[start..] {
            if self.used.contains(&v) {
                continue;
            }
            self.nodes += 1;
            if self.nodes >= self.budget {
                return false;
            }
            if !self.compatible(c, v) {
                continue;
            }
            self.chosen[c].push(v);
            self.used.insert(v);
            if self.extend(next_round, next_c) {
                return true;
            }
            self.chosen[c].pop();
            self.used.remove(&v);
        }
        false
    }
}

/// Runs the block search; returns the classes on success.
fn search_block<F: Fn(&[usize]) -> bool>(
    pools: &[&[usize]],
    seeds: &[Vec<usize>],
    l: usize,
    budget: u64,
    is_edge: F,
) -> Option<Vec<Vec<usize>>> {
    if l == 0 || pools.iter().any(|p| p.len() < l) {
        return None;
    }
    let mut s = BlockSearch {
        pools: pools.to_vec(),
        l,
        is_edge,
        budget,
        nodes: 0,
        chosen: vec![Vec::new(); pools.len()],
        used: HashSet::new(),
    };
    s.run_seeds(seeds).then_some(s.chosen)
}

fn sorted(v: &[usize]) -> Vec<usize> {
    v.iter().copied().sorted_unstable().dedup().collect()
}

/// Edges of `h` inside the union of the pools, usable as block seeds.
fn host_seeds(h: &Hypergraph, pools: &[&[usize]]) -> Vec<Vec<usize>> {
    let mut inside = vec![false; h.n()];
    pools
        .iter()
        .flat_map(|p| p.iter())
        .for_each(|&v| inside[v] = true);
    h.edges()
        .filter(|e| e.iter().all(|&v| inside[v]))
        .map(<[usize]>::to_vec)
        .collect()
}

fn backtrack_in_host(
    h: &Hypergraph,
    pools: &[&[usize]],
    roles: &[Role],
    l: usize,
    budget: u64,
) -> Option<MultipartiteWitness> {
    let seeds = host_seeds(h, pools);
    search_block(pools, &seeds, l, budget, |t| h.contains(t)).map(|classes| MultipartiteWitness {
        classes,
        roles: roles.to_vec(),
        path: ExtractionPath::Backtrack,
    })
}

/// A complete balanced r-partite block with classes of size `l`, found by
/// bounded search. `None` is not a proof of absence.
pub fn find_complete_r_partite(
    h: &Hypergraph,
    l: usize,
    budget: u64,
) -> Option<MultipartiteWitness> {
    let all: Vec<usize> = (0..h.n()).collect();
    find_complete_r_partite_in(h, &all, l, budget)
}

/// As [`find_complete_r_partite`] but restricted to `within`.
pub fn find_complete_r_partite_in(
    h: &Hypergraph,
    within: &[usize],
    l: usize,
    budget: u64,
) -> Option<MultipartiteWitness> {
    let within = sorted(within);
    let pools: Vec<&[usize]> = vec![&within; h.r()];
    backtrack_in_host(h, &pools, &vec![Role::Any; h.r()], l, budget)
}

fn require_density(
    h: &Hypergraph,
    kind: DensityKind,
    parts: &[&[usize]],
    eta: Density,
) -> Result<()> {
    let d = h.partite_density(kind, parts)?;
    let need = eta * Ratio::from_integer(2);
    if d < need {
        return Err(Error::InsufficientDensity {
            found: d.to_string(),
            required: need.to_string(),
        });
    }
    Ok(())
}

/// Runs the bucket route for each bucket in order, then the direct search.
fn with_fallback(
    pigeonhole: impl FnOnce() -> Option<Vec<Vec<usize>>>,
    backtrack: impl FnOnce() -> Option<MultipartiteWitness>,
    roles: &[Role],
) -> Option<MultipartiteWitness> {
    if let Some(classes) = pigeonhole() {
        return Some(MultipartiteWitness {
            classes,
            roles: roles.to_vec(),
            path: ExtractionPath::Pigeonhole,
        });
    }
    backtrack()
}

/// Block `(A_1, B_1, B_2, B_3)` with `A_1 ⊆ A` and `B_i ⊆ B`.
pub fn extract_one_three(
    h: &Hypergraph,
    a: &[usize],
    b: &[usize],
    eta: Density,
    l: usize,
    budget: u64,
) -> Result<Option<MultipartiteWitness>> {
    require_density(h, DensityKind::OneVsRest, &[a, b], eta)?;
    let (a, b) = (sorted(a), sorted(b));
    let roles = [Role::A, Role::B, Role::B, Role::B];
    let pigeonhole = || {
        let triples: Vec<Vec<usize>> = b.iter().copied().combinations(3).collect();
        if triples.len() * a.len() > PIGEONHOLE_CELL_LIMIT {
            return None;
        }
        let g = Incidence::from_fn(a.len(), triples.len(), |i, q| {
            let mut e = triples[q].clone();
            e.push(a[i]);
            h.contains(&e)
        });
        let dense = dense_side(&g, eta).ok()?;
        let mut spent = 0;
        for bucket in neighbourhood_buckets(&g, &dense) {
            if bucket.left.len() < l || spent >= budget {
                continue;
            }
            let seeds: Vec<Vec<usize>> = bucket.right.iter().map(|&q| triples[q].clone()).collect();
            let set: HashSet<Vec<usize>> = seeds.iter().cloned().collect();
            let pools: Vec<&[usize]> = vec![&b; 3];
            spent += seeds.len() as u64;
            if let Some(bs) = search_block(&pools, &seeds, l, budget, |t| set.contains(&sorted(t)))
            {
                let a1 = bucket.left[..l].iter().map(|&i| a[i]).collect();
                return Some(std::iter::once(a1).chain(bs).collect());
            }
        }
        None
    };
    let backtrack = || backtrack_in_host(h, &[&a, &b, &b, &b], &roles, l, budget);
    Ok(with_fallback(pigeonhole, backtrack, &roles))
}

/// Block `(A', B', Z_1, Z_2)` with `A' ⊆ A`, `B' ⊆ B`, `Z_i ⊆ Z`.
pub fn extract_two_two(
    h: &Hypergraph,
    a: &[usize],
    b: &[usize],
    z: &[usize],
    eta: Density,
    l: usize,
    budget: u64,
) -> Result<Option<MultipartiteWitness>> {
    require_density(h, DensityKind::TwoVsRest, &[a, b, z], eta)?;
    let (a, b, z) = (sorted(a), sorted(b), sorted(z));
    let roles = [Role::A, Role::B, Role::Z, Role::Z];
    let pigeonhole = || {
        let pairs: Vec<Vec<usize>> = z.iter().copied().combinations(2).collect();
        let left = a.len() * b.len();
        if pairs.len() * left > PIGEONHOLE_CELL_LIMIT {
            return None;
        }
        let g = Incidence::from_fn(left, pairs.len(), |ab, q| {
            h.contains(&[a[ab / b.len()], b[ab % b.len()], pairs[q][0], pairs[q][1]])
        });
        let dense = dense_side(&g, eta).ok()?;
        for bucket in neighbourhood_buckets(&g, &dense) {
            if bucket.left.len() < l * l {
                continue;
            }
            let ab: HashSet<(usize, usize)> = bucket
                .left
                .iter()
                .map(|&x| (a[x / b.len()], b[x % b.len()]))
                .collect();
            let ab_seeds: Vec<Vec<usize>> = ab.iter().map(|&(x, y)| vec![x, y]).sorted().collect();
            let Some(abk) = search_block(&[&a, &b], &ab_seeds, l, budget, |t| {
                ab.contains(&(t[0], t[1]))
            }) else {
                continue;
            };
            let zset: HashSet<(usize, usize)> = bucket
                .right
                .iter()
                .map(|&q| (pairs[q][0], pairs[q][1]))
                .collect();
            let z_seeds: Vec<Vec<usize>> = bucket.right.iter().map(|&q| pairs[q].clone()).collect();
            if let Some(zk) = search_block(&[&z, &z], &z_seeds, l, budget, |t| {
                zset.contains(&(t[0].min(t[1]), t[0].max(t[1])))
            }) {
                return Some(abk.into_iter().chain(zk).collect());
            }
        }
        None
    };
    let backtrack = || backtrack_in_host(h, &[&a, &b, &z, &z], &roles, l, budget);
    Ok(with_fallback(pigeonhole, backtrack, &roles))
}

/// Block `(A', B', C', Z')` with each class inside the matching input set.
#[allow(clippy::too_many_arguments)]
pub fn extract_partite_volume(
    h: &Hypergraph,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    z: &[usize],
    eta: Density,
    l: usize,
    budget: u64,
) -> Result<Option<MultipartiteWitness>> {
    require_density(h, DensityKind::Transversal, &[z, a, b, c], eta)?;
    let (a, b, c, z) = (sorted(a), sorted(b), sorted(c), sorted(z));
    let roles = [Role::A, Role::B, Role::C, Role::Z];
    let pigeonhole = || {
        let triples: Vec<[usize; 3]> = a
            .iter()
            .cartesian_product(&b)
            .cartesian_product(&c)
            .map(|((&x, &y), &w)| [x, y, w])
            .collect();
        if triples.len() * z.len() > PIGEONHOLE_CELL_LIMIT {
            return None;
        }
        // rows are Z vertices, columns the triples
        let g = Incidence::from_fn(triples.len(), z.len(), |t, q| {
            let [x, y, w] = triples[t];
            h.contains(&[x, y, w, z[q]])
        });
        let dense = dense_side(&g, eta).ok()?;
        for bucket in neighbourhood_buckets(&g, &dense) {
            if bucket.right.len() < l {
                continue;
            }
            let set: HashSet<[usize; 3]> = bucket.left.iter().map(|&t| triples[t]).collect();
            let seeds: Vec<Vec<usize>> = bucket.left.iter().map(|&t| triples[t].to_vec()).collect();
            if let Some(abc) = search_block(&[&a, &b, &c], &seeds, l, budget, |t| {
                set.contains(&[t[0], t[1], t[2]])
            }) {
                let zs = bucket.right[..l].iter().map(|&q| z[q]).collect();
                return Some(abc.into_iter().chain(std::iter::once(zs)).collect());
            }
        }
        None
    };
    let backtrack = || backtrack_in_host(h, &[&a, &b, &c, &z], &roles, l, budget);
    Ok(with_fallback(pigeonhole, backtrack, &roles))
}
