//! Exact matching search plus the small matchers: Hall, greedy, peeling and
//! the 4x4x4 tripartite check.

use std::collections::HashSet;

use itertools::Itertools;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Matching};
use crate::link::{LinkGraph, Triple};

/// Largest vertex count the bitmask search accepts.
pub const MAX_EXACT_VERTICES: usize = 128;

const FAILURE_CACHE_LIMIT: usize = 1 << 21;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingResult {
    pub matching: Matching,
    pub optimal: bool,
    pub nodes_explored: u64,
    pub timed_out: bool,
}

/// Result of a budgeted perfect-matching search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PmSearch {
    Found(Matching),
    /// Search space exhausted without a perfect matching.
    Absent,
    TimedOut,
}

struct Packed {
    n: usize,
    r: usize,
    edges: Vec<u128>,
    // incident[v]: indices into `edges`, ascending (so lexicographic)
    incident: Vec<Vec<u32>>,
}

impl Packed {
    fn new(h: &Hypergraph) -> Result<Self> {
        if h.n() > MAX_EXACT_VERTICES {
            return Err(Error::TooLarge(format!(
                "exact search supports n <= {MAX_EXACT_VERTICES}, got {}",
                h.n()
            )));
        }
        let edges: Vec<u128> = h
            .edges()
            .map(|e| e.iter().fold(0u128, |m, &v| m | 1 << v))
            .collect();
        let incident = (0..h.n())
            .map(|v| h.incident(v).map(|i| i as u32).collect())
            .collect();
        Ok(Packed {
            n: h.n(),
            r: h.r(),
            edges,
            incident,
        })
    }

    fn full(&self) -> u128 {
        if self.n == 128 {
            u128::MAX
        } else {
            (1u128 << self.n) - 1
        }
    }

    fn live_degree(&self, v: usize, dead: u128) -> usize {
        self.incident[v]
            .iter()
            .filter(|&&e| self.edges[e as usize] & dead == 0)
            .count()
    }

    /// Size of a greedy vertex cover of the live edges; bounds the matching number.
    fn cover_bound(&self, dead: u128, cap: usize) -> usize {
        let mut live: Vec<u128> = self
            .edges
            .iter()
            .copied()
            .filter(|&e| e & dead == 0)
            .collect();
        let mut size = 0;
        let mut deg = vec![0u32; self.n];
        while !live.is_empty() {
            if size >= cap {
                return size;
            }
            deg.iter_mut().for_each(|d| *d = 0);
            for &e in &live {
                let mut m = e;
                while m != 0 {
                    deg[m.trailing_zeros() as usize] += 1;
                    m &= m - 1;
                }
            }
            let v = (0..self.n)
                .max_by_key(|&v| (deg[v], std::cmp::Reverse(v)))
                .unwrap();
            live.retain(|&e| e >> v & 1 == 0);
            size += 1;
        }
        size
    }

    fn to_matching(&self, chosen: &[u128]) -> Matching {
        Matching::new(
            chosen
                .iter()
                .map(|&m| (0..self.n).filter(|&v| m >> v & 1 == 1).collect::<Vec<_>>()),
        )
    }
}

struct MaxSearch<'a> {
    p: &'a Packed,
    budget: u64,
    nodes: u64,
    timed_out: bool,
    stack: Vec<u128>,
    best: Vec<u128>,
}

impl MaxSearch<'_> {
    fn run(&mut self, mut dead: u128) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.timed_out = true;
            return;
        }
        if self.stack.len() > self.best.len() {
            self.best = self.stack.clone();
        }
        let p = self.p;
        let alive = p.full() & !dead;
        let mut pick: Option<(usize, usize)> = None;
        for v in (0..p.n).filter(|&v| alive >> v & 1 == 1) {
            let d = p.live_degree(v, dead);
            if d == 0 {
                dead |= 1 << v;
            } else if pick.is_none_or(|(_, bd)| d < bd) {
                pick = Some((v, d));
            }
        }
        let Some((v, _)) = pick else { return };
        let alive = p.full() & !dead;
        let room = alive.count_ones() as usize / p.r;
        let target = self.best.len() - self.stack.len();
        if room <= target {
            return;
        }
        if p.cover_bound(dead, target + 1) <= target {
            return;
        }
        for &e in &p.incident[v] {
            let em = p.edges[e as usize];
            if em & dead != 0 {
                continue;
            }
            self.stack.push(em);
            self.run(dead | em);
            self.stack.pop();
            if self.timed_out || self.best.len() * p.r + p.r > p.n {
                return;
            }
        }
        self.run(dead | 1 << v);
    }
}

/// Branch and bound for a maximum matching, limited to `node_budget` nodes.
pub fn max_matching_exact(h: &Hypergraph, node_budget: u64) -> Result<MatchingResult> {
    let p = Packed::new(h)?;
    let mut s = MaxSearch {
        p: &p,
        budget: node_budget,
        nodes: 0,
        timed_out: false,
        stack: Vec::new(),
        best: Vec::new(),
    };
    s.run(0);
    Ok(MatchingResult {
        matching: p.to_matching(&s.best),
        optimal: !s.timed_out,
        nodes_explored: s.nodes,
        timed_out: s.timed_out,
    })
}

struct PmSearcher<'a> {
    p: &'a Packed,
    budget: Option<u64>,
    nodes: u64,
    timed_out: bool,
    stack: Vec<u128>,
    failed: HashSet<u128>,
}

impl PmSearcher<'_> {
    fn run(&mut self, dead: u128) -> bool {
        let p = self.p;
        if dead == p.full() {
            return true;
        }
        self.nodes += 1;
        if self.budget.is_some_and(|b| self.nodes > b) {
            self.timed_out = true;
            return false;
        }
        if self.failed.contains(&dead) {
            return false;
        }
        let alive = p.full() & !dead;
        let mut pick: Option<(usize, usize)> = None;
        for v in (0..p.n).filter(|&v| alive >> v & 1 == 1) {
            let d = p.live_degree(v, dead);
            if d == 0 {
                return self.fail(dead);
            }
            if pick.is_none_or(|(_, bd)| d < bd) {
                pick = Some((v, d));
            }
        }
        let (v, _) = pick.expect("some vertex is alive");
        let need = alive.count_ones() as usize / p.r;
        if p.cover_bound(dead, need) < need {
            return self.fail(dead);
        }
        for &e in &p.incident[v] {
            let em = p.edges[e as usize];
            if em & dead != 0 {
                continue;
            }
            self.stack.push(em);
            if self.run(dead | em) {
                return true;
            }
            self.stack.pop();
            if self.timed_out {
                return false;
            }
        }
        self.fail(dead)
    }

    fn fail(&mut self, dead: u128) -> bool {
        if !self.timed_out && self.failed.len() < FAILURE_CACHE_LIMIT {
            self.failed.insert(dead);
        }
        false
    }
}

fn pm_search(h: &Hypergraph, budget: Option<u64>) -> Result<(PmSearch, u64)> {
    if !h.n().is_multiple_of(h.r()) {
        return Err(Error::Indivisible {
            n: h.n(),
            by: h.r(),
        });
    }
    let p = Packed::new(h)?;
    let mut s = PmSearcher {
        p: &p,
        budget,
        nodes: 0,
        timed_out: false,
        stack: Vec::new(),
        failed: HashSet::new(),
    };
    let outcome = if s.run(0) {
        PmSearch::Found(p.to_matching(&s.stack))
    } else if s.timed_out {
        PmSearch::TimedOut
    } else {
        PmSearch::Absent
    };
    Ok((outcome, s.nodes))
}

/// Exhaustive perfect-matching search. `None` is a proof of absence.
///
/// Ignores budgets; intended for `n` up to the mid twenties at full density.
pub fn has_perfect_matching(h: &Hypergraph) -> Result<Option<Matching>> {
    match pm_search(h, None)?.0 {
        PmSearch::Found(m) => Ok(Some(m)),
        _ => Ok(None),
    }
}

/// Perfect-matching search that gives up after `node_budget` nodes.
pub fn perfect_matching_budgeted(h: &Hypergraph, node_budget: u64) -> Result<(PmSearch, u64)> {
    pm_search(h, Some(node_budget))
}

/// Four disjoint triples of `l`, trying every `(sigma, tau)` pair.
pub fn tripartite_pm_444(l: LinkGraph) -> Option<[Triple; 4]> {
    let perms: Vec<Vec<usize>> = (0..4).permutations(4).collect();
    for sigma in &perms {
        for tau in &perms {
            if (0..4).all(|i| l.has(i, sigma[i], tau[i])) {
                return Some(std::array::from_fn(|i| {
                    (i as u8, sigma[i] as u8, tau[i] as u8)
                }));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HallOutcome {
    /// `assignment[q]` is the left vertex matched to right vertex `q`.
    Saturating(Vec<usize>),
    /// Right vertices whose joint neighbourhood is too small.
    Violator(Vec<usize>),
}

/// Matches every right vertex into the left side, or returns a Hall violator.
///
/// `adjacency[q]` lists the left neighbours of right vertex `q`.
pub fn hall_matching(adjacency: &[Vec<usize>], left: usize) -> HallOutcome {
    let mut owner: Vec<Option<usize>> = vec![None; left];
    let mut assignment = vec![usize::MAX; adjacency.len()];
    for q in 0..adjacency.len() {
        let mut seen = vec![false; left];
        if !augment(q, adjacency, &mut owner, &mut assignment, &mut seen) {
            let mut violator: Vec<usize> = std::iter::once(q)
                .chain((0..left).filter(|&l| seen[l]).filter_map(|l| owner[l]))
                .collect();
            violator.sort_unstable();
            return HallOutcome::Violator(violator);
        }
    }
    HallOutcome::Saturating(assignment)
}

fn augment(
    q: usize,
    adjacency: &[Vec<usize>],
    owner: &mut [Option<usize>],
    assignment: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for &l in &adjacency[q] {
        if seen[l] {
            continue;
        }
        seen[l] = true;
        let free = match owner[l] {
            None => true,
            Some(other) => augment(other, adjacency, owner, assignment, seen),
        };
        if free {
            owner[l] = Some(q);
            assignment[q] = l;
            return true;
        }
    }
    false
}

/// Joint neighbourhood of `q` in `adjacency`.
pub fn neighbourhood(adjacency: &[Vec<usize>], q: &[usize]) -> Vec<usize> {
    q.iter()
        .flat_map(|&x| adjacency[x].iter().copied())
        .sorted_unstable()
        .dedup()
        .collect()
}

/// Maximal matching taking edges in lexicographic order.
pub fn greedy_matching(h: &Hypergraph) -> Matching {
    let mut used = vec![false; h.n()];
    let mut m = Matching::default();
    for e in h.edges() {
        if e.iter().all(|&v| !used[v]) {
            e.iter().for_each(|&v| used[v] = true);
            m.push(e);
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peeled {
    /// Surviving original vertex ids, ascending.
    pub kept: Vec<usize>,
    /// `H` restricted to `kept`, relabelled.
    pub graph: Hypergraph,
    /// `|E(H)| / |V(H)|` of the input.
    pub theta: Ratio<u64>,
}

/// Deletes vertices of degree below `|E|/|V|` until none remain.
pub fn min_degree_peel(h: &Hypergraph) -> Result<Peeled> {
    let m = h.edge_count() as u64;
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    let n = h.n() as u64;
    let theta = Ratio::new(m, n);
    let mut alive = vec![true; h.n()];
    let mut edge_alive = vec![true; h.edge_count()];
    let mut deg: Vec<u64> = (0..h.n()).map(|v| h.vertex_degree(v) as u64).collect();
    let mut queue: Vec<usize> = (0..h.n()).filter(|&v| deg[v] * n < m).collect();
    while let Some(v) = queue.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for e in h.incident(v) {
            if !edge_alive[e] {
                continue;
            }
            edge_alive[e] = false;
            for &u in h.edge(e) {
                if alive[u] {
                    deg[u] -= 1;
                    if deg[u] * n < m {
                        queue.push(u);
                    }
                }
            }
        }
    }
    let kept: Vec<usize> = (0..h.n()).filter(|&v| alive[v]).collect();
    let graph = h.induce(&kept);
    Ok(Peeled { kept, graph, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::cover_mask;

    fn extremal(n: usize) -> Hypergraph {
        let a = n / 4 - 1;
        let edges: Vec<Vec<usize>> = (0..n).combinations(4).filter(|e| e[0] < a).collect();
        Hypergraph::new(n, 4, edges).unwrap()
    }

    #[test]
    fn exact_examples() {
        let r = max_matching_exact(&extremal(8), 1_000_000).unwrap();
        assert_eq!(r.matching.len(), 1);
        assert!(r.optimal);
        let k8 = Hypergraph::complete(8, 4).unwrap();
        assert_eq!(
            max_matching_exact(&k8, 1_000_000).unwrap().matching.len(),
            2
        );
        let planted = Hypergraph::new(12, 4, [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]]).unwrap();
        assert_eq!(
            max_matching_exact(&planted, 1000).unwrap().matching.len(),
            3
        );
    }

    #[test]
    fn budget_exhaustion_reports_timeout() {
        let h = extremal(16);
        let r = max_matching_exact(&h, 1).unwrap();
        assert!(r.timed_out && !r.optimal);
        assert!(h.validate_matching(&r.matching).valid);
    }

    #[test]
    fn perfect_matching_examples() {
        let k8 = Hypergraph::complete(8, 4).unwrap();
        let m = has_perfect_matching(&k8).unwrap().unwrap();
        assert!(k8.validate_matching(&m).perfect);
        assert!(has_perfect_matching(&extremal(8)).unwrap().is_none());
        assert!(has_perfect_matching(&extremal(20)).unwrap().is_none());
        assert!(has_perfect_matching(&Hypergraph::empty(8, 4).unwrap())
            .unwrap()
            .is_none());
        assert_eq!(
            has_perfect_matching(&Hypergraph::complete(9, 4).unwrap()),
            Err(Error::Indivisible { n: 9, by: 4 })
        );
    }

    #[test]
    fn tripartite_examples() {
        assert_eq!(
            tripartite_pm_444(LinkGraph::FULL),
            Some([(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 3, 3)])
        );
        let diag = LinkGraph::from_triples((0..4).map(|i| (i, i, i)));
        assert!(tripartite_pm_444(diag).is_some());
        assert!(tripartite_pm_444(LinkGraph(cover_mask(0, 0, 0))).is_none());
    }

    #[test]
    fn hall_examples() {
        let k = vec![vec![0, 1, 2]; 3];
        let HallOutcome::Saturating(a) = hall_matching(&k, 3) else {
            panic!("expected saturation")
        };
        assert!(a.iter().all_unique());
        let star = vec![vec![0], vec![0]];
        let HallOutcome::Violator(q) = hall_matching(&star, 2) else {
            panic!("expected violator")
        };
        assert_eq!(q, vec![0, 1]);
        assert_eq!(neighbourhood(&star, &q), vec![0]);
    }

    #[test]
    fn greedy_examples() {
        let k8 = Hypergraph::complete(8, 4).unwrap();
        assert_eq!(greedy_matching(&k8).len(), 2);
        let disjoint =
            Hypergraph::new(12, 4, [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]]).unwrap();
        assert_eq!(greedy_matching(&disjoint).len(), 3);
    }

    #[test]
    fn peel_examples() {
        let path = Hypergraph::new(3, 2, [[0, 1], [1, 2]]).unwrap();
        let p = min_degree_peel(&path).unwrap();
        assert_eq!(p.kept, vec![0, 1, 2]);
        assert_eq!(p.theta, Ratio::new(2, 3));
        let k8 = Hypergraph::complete(8, 4).unwrap();
        let p = min_degree_peel(&k8).unwrap();
        assert_eq!(p.graph, k8);
        assert_eq!(p.graph.min_degree(1).unwrap(), 35);
        // vertex 0 is in every edge, the rest in exactly one
        let star: Vec<Vec<usize>> = (0..4)
            .map(|i| vec![0, 3 * i + 1, 3 * i + 2, 3 * i + 3])
            .collect();
        let star = Hypergraph::new(13, 4, star).unwrap();
        let p = min_degree_peel(&star).unwrap();
        assert_eq!(p.kept.len(), 13);
        for v in 0..p.graph.n() {
            assert!(Ratio::from_integer(p.graph.vertex_degree(v) as u64) >= p.theta);
        }
        assert_eq!(
            min_degree_peel(&Hypergraph::empty(5, 4).unwrap()),
            Err(Error::EmptyInput)
        );
    }
}
