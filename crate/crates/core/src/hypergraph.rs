//! Uniform hypergraphs, vertex degrees, exact densities, restriction and matchings.
//!
//! Edges are kept as strictly increasing vertex tuples in lexicographic order.
//! Two acceleration structures are built once at construction: a per-vertex
//! bitset over edge indices (degrees of vertex sets are intersection counts)
//! and an edge-membership index keyed by the colex rank of the tuple.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact density value.
pub type Density = Ratio<u64>;

/// Largest index space for which membership uses a flat bitset.
const DENSE_LOOKUP_LIMIT: u128 = 1 << 26;

/// `n choose k`, exact.
///
/// Panics on `u128` overflow, which needs far larger inputs than anything
/// this crate enumerates.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(u128::from(n - i))
            .expect("binomial overflow")
            / u128::from(i + 1);
    }
    acc
}

pub(crate) fn binomial_u64(n: usize, k: usize) -> Result<u64> {
    u64::try_from(binomial(n as u64, k as u64))
        .map_err(|_| Error::TooLarge(format!("C({n},{k}) exceeds u64")))
}

#[derive(Debug, Clone)]
enum EdgeLookup {
    Dense(FixedBitSet),
    Sparse(HashSet<u128>),
}

#[derive(Debug, Clone)]
pub struct Hypergraph {
    n: usize,
    r: usize,
    edges: Vec<usize>,
    incidence: Vec<FixedBitSet>,
    lookup: EdgeLookup,
    // binom[k][v] = C(v, k) for 1 <= k <= r, v < n
    binom: Vec<Vec<u128>>,
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.r == other.r && self.edges == other.edges
    }
}

impl Eq for Hypergraph {}

/// Which of the density notions to evaluate; each fixes how many vertices
/// an edge takes from every part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityKind {
    /// `d_r(U)`: one part, all `r` vertices inside it.
    Restriction,
    /// `d_r(A, (B choose r-1))`.
    OneVsRest,
    /// `d_r(A, B, (C choose r-2))`.
    TwoVsRest,
    /// `d_r(A_1, (A_2 x ... x A_r))`: one vertex from each of `r` parts.
    Transversal,
}

impl DensityKind {
    pub fn multiplicities(self, r: usize) -> Vec<usize> {
        match self {
            DensityKind::Restriction => vec![r],
            DensityKind::OneVsRest => vec![1, r - 1],
            DensityKind::TwoVsRest => vec![1, 1, r - 2],
            DensityKind::Transversal => vec![1; r],
        }
    }
}

/// Counting strategy for [`Hypergraph::count_typed_edges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountRoute {
    /// Pick the cheaper of the two below.
    Auto,
    /// Enumerate every candidate tuple and probe the membership index.
    Enumerate,
    /// Walk the edges incident to the cheapest part.
    Scan,
}

/// Ordered list of pairwise disjoint, nonempty vertex classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartiteSpec {
    classes: Vec<Vec<usize>>,
}

impl PartiteSpec {
    pub fn new(classes: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let refs: Vec<&[usize]> = classes.iter().map(Vec::as_slice).collect();
        check_disjoint(&refs, n)?;
        if classes.iter().any(Vec::is_empty) {
            return Err(Error::InvalidPartition("empty class".into()));
        }
        Ok(PartiteSpec { classes })
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn as_slices(&self) -> Vec<&[usize]> {
        self.classes.iter().map(Vec::as_slice).collect()
    }
}

/// Verdict of [`Hypergraph::validate_matching`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingCheck {
    pub valid: bool,
    pub perfect: bool,
}

/// A set of edges, each stored sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    edges: Vec<Vec<usize>>,
}

impl Matching {
    pub fn new<I, E>(edges: I) -> Self
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[usize]>,
    {
        Matching {
            edges: edges
                .into_iter()
                .map(|e| {
                    let mut e = e.as_ref().to_vec();
                    e.sort_unstable();
                    e
                })
                .collect(),
        }
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn push(&mut self, edge: &[usize]) {
        let mut e = edge.to_vec();
        e.sort_unstable();
        self.edges.push(e);
    }

    pub fn extend(&mut self, other: &Matching) {
        self.edges.extend(other.edges.iter().cloned());
    }

    /// Covered vertices, sorted, with multiplicity.
    pub fn vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.edges.iter().flatten().copied().collect();
        vs.sort_unstable();
        vs
    }

    /// Edges sorted lexicographically; handy for comparing matchings as sets.
    pub fn canonical(mut self) -> Self {
        self.edges.sort();
        self
    }
}

pub(crate) fn check_disjoint(parts: &[&[usize]], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for part in parts {
        for &v in *part {
            if v >= n {
                return Err(Error::InvalidVertex { vertex: v, n });
            }
            if seen[v] {
                return Err(Error::InvalidPartition(format!("vertex {v} appears twice")));
            }
            seen[v] = true;
        }
    }
    Ok(())
}

impl Hypergraph {
    /// Builds a hypergraph from edges given in any vertex order.
    pub fn new<I, E>(n: usize, r: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[usize]>,
    {
        if r < 2 || n < r {
            return Err(Error::InvalidHypergraph(format!(
                "need r >= 2 and n >= r, got n = {n}, r = {r}"
            )));
        }
        let mut list: Vec<Vec<usize>> = Vec::new();
        for e in edges {
            let mut e = e.as_ref().to_vec();
            if e.len() != r {
                return Err(Error::InvalidHypergraph(format!(
                    "edge {e:?} does not have {r} vertices"
                )));
            }
            e.sort_unstable();
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidVertex { vertex: v, n });
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidHypergraph(format!(
                    "edge {e:?} repeats a vertex"
                )));
            }
            list.push(e);
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidHypergraph(format!(
                "duplicate edge {:?}",
                w[0]
            )));
        }
        Self::from_sorted_flat(n, r, list.into_iter().flatten().collect())
    }

    /// `flat` must hold distinct strictly increasing tuples in lexicographic order.
    pub(crate) fn from_sorted_flat(n: usize, r: usize, flat: Vec<usize>) -> Result<Self> {
        debug_assert_eq!(flat.len() % r, 0);
        let m = flat.len() / r;
        let binom: Vec<Vec<u128>> = (0..=r)
            .map(|k| (0..n).map(|v| binomial(v as u64, k as u64)).collect())
            .collect();
        let space = binomial(n as u64, r as u64);
        let mut incidence = vec![FixedBitSet::with_capacity(m); n];
        for (i, e) in flat.chunks_exact(r).enumerate() {
            for &v in e {
                incidence[v].insert(i);
            }
        }
        let mut h = Hypergraph {
            n,
            r,
            edges: flat,
            incidence,
            lookup: EdgeLookup::Sparse(HashSet::new()),
            binom,
        };
        h.lookup = if space <= DENSE_LOOKUP_LIMIT {
            let mut bits = FixedBitSet::with_capacity(space as usize);
            for e in h.edges.chunks_exact(r) {
                bits.insert(h.rank(e) as usize);
            }
            EdgeLookup::Dense(bits)
        } else {
            let ranks = h.edges.chunks_exact(r).map(|e| h.rank(e)).collect();
            EdgeLookup::Sparse(ranks)
        };
        Ok(h)
    }

    pub fn empty(n: usize, r: usize) -> Result<Self> {
        Self::new(n, r, std::iter::empty::<Vec<usize>>())
    }

    /// Complete r-graph on n vertices.
    pub fn complete(n: usize, r: usize) -> Result<Self> {
        if r < 2 || n < r {
            return Err(Error::InvalidHypergraph(format!("n = {n}, r = {r}")));
        }
        let flat = (0..n).combinations(r).flatten().collect();
        Self::from_sorted_flat(n, r, flat)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len() / self.r
    }

    pub fn edge(&self, index: usize) -> &[usize] {
        &self.edges[index * self.r..(index + 1) * self.r]
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.edges.chunks_exact(self.r)
    }

    /// Indices of the edges containing `v`, ascending.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.incidence[v].ones()
    }

    pub fn vertex_degree(&self, v: usize) -> usize {
        self.incidence[v].count_ones(..)
    }

    fn rank(&self, sorted: &[usize]) -> u128 {
        sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| self.binom[i + 1][v])
            .sum()
    }

    /// Membership for a strictly increasing tuple.
    pub fn contains_sorted(&self, sorted: &[usize]) -> bool {
        debug_assert!(sorted.windows(2).all(|w| w[0] < w[1]));
        if sorted.len() != self.r || sorted.iter().any(|&v| v >= self.n) {
            return false;
        }
        let rank = self.rank(sorted);
        match &self.lookup {
            EdgeLookup::Dense(bits) => bits.contains(rank as usize),
            EdgeLookup::Sparse(set) => set.contains(&rank),
        }
    }

    /// Membership for a vertex set in any order.
    pub fn contains(&self, vertices: &[usize]) -> bool {
        let mut e = vertices.to_vec();
        e.sort_unstable();
        if e.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        self.contains_sorted(&e)
    }

    /// Number of edges containing every vertex of `set`.
    pub fn degree(&self, set: &[usize]) -> Result<u64> {
        if set.is_empty() || set.len() >= self.r {
            return Err(Error::InvalidDegreeOrder {
                order: set.len(),
                max: self.r - 1,
            });
        }
        for &v in set {
            if v >= self.n {
                return Err(Error::InvalidVertex {
                    vertex: v,
                    n: self.n,
                });
            }
        }
        if set.iter().duplicates().next().is_some() {
            return Err(Error::InvalidPartition("repeated vertex".into()));
        }
        Ok(self.degree_unchecked(set))
    }

    fn degree_unchecked(&self, set: &[usize]) -> u64 {
        match set {
            [v] => self.incidence[*v].count_ones(..) as u64,
            [u, v] => self.incidence[*u].intersection_count(&self.incidence[*v]) as u64,
            _ => {
                let mut acc = self.incidence[set[0]].clone();
                for &v in &set[1..] {
                    acc.intersect_with(&self.incidence[v]);
                }
                acc.count_ones(..) as u64
            }
        }
    }

    /// `delta_d`: minimum degree over all d-sets.
    pub fn min_degree(&self, d: usize) -> Result<u64> {
        if d == 0 || d >= self.r {
            return Err(Error::InvalidDegreeOrder {
                order: d,
                max: self.r - 1,
            });
        }
        if d == 1 {
            return Ok((0..self.n)
                .map(|v| self.vertex_degree(v) as u64)
                .min()
                .unwrap_or(0));
        }
        Ok((0..self.n)
            .combinations(d)
            .map(|set| self.degree_unchecked(&set))
            .min()
            .unwrap_or(0))
    }

    /// Number of edges inside `set`.
    pub fn edges_within(&self, set: &[usize]) -> Result<u64> {
        check_disjoint(&[set], self.n)?;
        if set.len() < self.r {
            return Ok(0);
        }
        self.count_typed_edges(&[set], &[self.r], CountRoute::Auto)
    }

    /// `d_r(H|_U)`, exact.
    pub fn density(&self, set: &[usize]) -> Result<Density> {
        self.partite_density(DensityKind::Restriction, &[set])
    }

    /// Exact partite density of the given kind over disjoint parts.
    pub fn partite_density(&self, kind: DensityKind, parts: &[&[usize]]) -> Result<Density> {
        let mult = kind.multiplicities(self.r);
        if parts.len() != mult.len() {
            return Err(Error::InvalidPartition(format!(
                "{kind:?} takes {} parts, got {}",
                mult.len(),
                parts.len()
            )));
        }
        check_disjoint(parts, self.n)?;
        let mut denom: u64 = 1;
        for (part, &k) in parts.iter().zip(&mult) {
            if part.len() < k {
                return Err(Error::TooSmall {
                    size: part.len(),
                    r: k,
                });
            }
            denom = denom
                .checked_mul(binomial_u64(part.len(), k)?)
                .ok_or_else(|| Error::TooLarge("density denominator".into()))?;
        }
        let count = self.count_typed_edges(parts, &mult, CountRoute::Auto)?;
        Ok(Ratio::new(count, denom))
    }

    /// Counts edges with exactly `mult[c]` vertices in `parts[c]` and none
    /// elsewhere. Parts must be disjoint; this is not rechecked.
    pub fn count_typed_edges(
        &self,
        parts: &[&[usize]],
        mult: &[usize],
        route: CountRoute,
    ) -> Result<u64> {
        debug_assert_eq!(mult.iter().sum::<usize>(), self.r);
        let tuples: u128 = parts
            .iter()
            .zip(mult)
            .map(|(p, &k)| binomial(p.len() as u64, k as u64))
            .product();
        if tuples == 0 {
            return Ok(0);
        }
        let (pivot, scan_cost) = parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    i,
                    p.iter()
                        .map(|&v| self.vertex_degree(v) as u128)
                        .sum::<u128>(),
                )
            })
            .min_by_key(|&(_, c)| c)
            .expect("at least one part");
        let enumerate = match route {
            CountRoute::Enumerate => true,
            CountRoute::Scan => false,
            CountRoute::Auto => tuples <= scan_cost,
        };
        if enumerate {
            Ok(self.count_by_enumeration(parts, mult))
        } else {
            Ok(self.count_by_scan(parts, mult, pivot))
        }
    }

    fn count_by_enumeration(&self, parts: &[&[usize]], mult: &[usize]) -> u64 {
        let choices: Vec<Vec<Vec<usize>>> = parts
            .iter()
            .zip(mult)
            .map(|(p, &k)| p.iter().copied().combinations(k).collect())
            .collect();
        let mut count = 0;
        let mut buf = Vec::with_capacity(self.r);
        for combo in choices.iter().map(|c| c.iter()).multi_cartesian_product() {
            buf.clear();
            for piece in combo {
                buf.extend_from_slice(piece);
            }
            buf.sort_unstable();
            if self.contains_sorted(&buf) {
                count += 1;
            }
        }
        count
    }

    fn count_by_scan(&self, parts: &[&[usize]], mult: &[usize], pivot: usize) -> u64 {
        const OUTSIDE: u8 = u8::MAX;
        let mut label = vec![OUTSIDE; self.n];
        for (c, part) in parts.iter().enumerate() {
            for &v in *part {
                label[v] = c as u8;
            }
        }
        let mut count = 0;
        let mut seen = vec![0usize; parts.len()];
        for &v in parts[pivot] {
            'edges: for e in self.incident(v) {
                seen.iter_mut().for_each(|s| *s = 0);
                let mut first_in_pivot = usize::MAX;
                for &u in self.edge(e) {
                    let l = label[u];
                    if l == OUTSIDE {
                        continue 'edges;
                    }
                    seen[l as usize] += 1;
                    if l as usize == pivot && first_in_pivot == usize::MAX {
                        first_in_pivot = u;
                    }
                }
                // an edge with k pivot vertices is met k times; keep one
                if seen == mult && first_in_pivot == v {
                    count += 1;
                }
            }
        }
        count
    }

    /// `H|_U` relabelled to `0..|U|` in increasing vertex order.
    pub fn induce(&self, set: &[usize]) -> Hypergraph {
        let mut verts = set.to_vec();
        verts.sort_unstable();
        verts.dedup();
        let k = verts.len();
        let mut new_id = vec![usize::MAX; self.n];
        for (i, &v) in verts.iter().enumerate() {
            new_id[v] = i;
        }
        let mut flat = Vec::new();
        if k >= self.r {
            if binomial(k as u64, self.r as u64) <= self.edge_count() as u128 {
                for combo in (0..k).combinations(self.r) {
                    let orig: Vec<usize> = combo.iter().map(|&i| verts[i]).collect();
                    if self.contains_sorted(&orig) {
                        flat.extend(combo);
                    }
                }
            } else {
                for e in self.edges() {
                    if e.iter().all(|&v| new_id[v] != usize::MAX) {
                        flat.extend(e.iter().map(|&v| new_id[v]));
                    }
                }
            }
        }
        // k < r cannot hold any edge; keep the uniformity and pad n to r
        Hypergraph::from_sorted_flat(k.max(self.r), self.r, flat)
            .expect("restriction of a valid hypergraph")
    }

    pub fn validate_matching(&self, matching: &Matching) -> MatchingCheck {
        let mut used = vec![false; self.n];
        for e in matching.edges() {
            if !self.contains(e) {
                return MatchingCheck {
                    valid: false,
                    perfect: false,
                };
            }
            for &v in e {
                if used[v] {
                    return MatchingCheck {
                        valid: false,
                        perfect: false,
                    };
                }
                used[v] = true;
            }
        }
        MatchingCheck {
            valid: true,
            perfect: self.r * matching.len() == self.n,
        }
    }
}
