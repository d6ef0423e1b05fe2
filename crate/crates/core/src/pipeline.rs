//! The two-track matcher: extremal detection and the extremal matcher, the
//! cover build-and-extend loop with absorption, and an exact fallback.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use itertools::Itertools;
use num_rational::Ratio;
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::absorb::{
    absorb, build_absorbing_matching, AbsorbConfig, AbsorberStats, AbsorbingMatching,
};
use crate::error::{Error, Result};
use crate::extract::{
    extract_one_three, extract_partite_volume, extract_two_two, find_complete_r_partite_in,
    MultipartiteWitness,
};
use crate::hypergraph::{binomial, Density, DensityKind, Hypergraph, Matching};
use crate::link::{build_link_graph, LinkGraph, PairSystem, Triple, Verdict, Witness};
use crate::rng;
use crate::solve::{
    greedy_matching, hall_matching, has_perfect_matching, min_degree_peel,
    perfect_matching_budgeted, HallOutcome, PmSearch,
};

fn r(n: i64, d: i64) -> Density {
    Ratio::new(n as u64, d as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Extremal-case parameter.
    pub alpha: Density,
    /// Target leftover fraction of the cover.
    pub gamma: Density,
    /// Connectedness threshold is `2 eta`.
    pub eta: Density,
    /// Class size of the initial cover blocks.
    pub l: usize,
    /// Class size of every block pulled by an extension op; divides `l`.
    pub pull: usize,
    pub absorb: AbsorbConfig,
    /// Node budget of each extraction call.
    pub extract_budget: u64,
    pub max_rounds: usize,
    /// Cap on block triples examined per extension pass.
    pub triple_samples: usize,
    pub detect_iterations: usize,
    pub t1_retries: usize,
    /// Exact fallback runs only up to this many vertices.
    pub fallback_max_n: usize,
    pub fallback_budget: u64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: r(1, 10),
            gamma: r(1, 16),
            eta: r(1, 20),
            l: 1,
            pull: 1,
            absorb: AbsorbConfig {
                trials: 16,
                ..AbsorbConfig::default()
            },
            extract_budget: 200_000,
            max_rounds: 64,
            triple_samples: 512,
            detect_iterations: 64,
            t1_retries: 16,
            fallback_max_n: 128,
            fallback_budget: 20_000_000,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let zero = Ratio::from_integer(0);
        let one = Ratio::from_integer(1);
        if !(zero < self.gamma && self.gamma <= self.alpha && self.alpha <= one) {
            return Err(Error::InvalidHypergraph(format!(
                "need 0 < gamma <= alpha <= 1, got gamma = {}, alpha = {}",
                self.gamma, self.alpha
            )));
        }
        if self.eta <= zero || self.l == 0 || self.pull == 0 || !self.l.is_multiple_of(self.pull) {
            return Err(Error::InvalidHypergraph(
                "need eta > 0, l >= 1, pull >= 1 and pull dividing l".into(),
            ));
        }
        Ok(())
    }
}

/// Disjoint balanced complete 4-partite blocks with a common class size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub blocks: Vec<MultipartiteWitness>,
    pub class_size: usize,
    /// Vertices of the universe outside every block, ascending.
    pub leftover: Vec<usize>,
}

impl Cover {
    pub fn empty(universe: &[usize], class_size: usize) -> Self {
        Cover {
            blocks: Vec::new(),
            class_size,
            leftover: universe.iter().copied().sorted_unstable().collect(),
        }
    }

    pub fn covered(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.classes.iter().map(Vec::len).sum::<usize>())
            .sum()
    }

    /// Disjointness, uniform balance, completeness and leftover bookkeeping.
    pub fn verify(&self, h: &Hypergraph, universe: &[usize]) -> bool {
        let mut seen = vec![false; h.n()];
        let mut all: Vec<usize> = Vec::new();
        for b in &self.blocks {
            if !b.verify(h) || b.class_size() != self.class_size {
                return false;
            }
            all.extend(b.vertices());
        }
        all.extend(&self.leftover);
        for &v in &all {
            if seen[v] {
                return false;
            }
            seen[v] = true;
        }
        all.sort_unstable();
        all == universe
            .iter()
            .copied()
            .sorted_unstable()
            .collect::<Vec<_>>()
    }

    /// `l` transversal edges per block.
    pub fn matching(&self) -> Matching {
        Matching::new(
            self.blocks
                .iter()
                .flat_map(MultipartiteWitness::diagonal_edges),
        )
    }

    /// Splits every block into blocks of class size `p`.
    fn resplit(&mut self, p: usize) {
        let mut out = Vec::new();
        for b in self.blocks.drain(..) {
            let m = b.class_size();
            debug_assert_eq!(m % p, 0);
            for chunk in 0..m / p {
                out.push(MultipartiteWitness {
                    classes: b
                        .classes
                        .iter()
                        .map(|c| c[chunk * p..(chunk + 1) * p].to_vec())
                        .collect(),
                    roles: b.roles.clone(),
                    path: b.path,
                });
            }
        }
        self.blocks = out;
        self.class_size = p;
    }

    fn release(&mut self, vs: &[usize]) {
        self.leftover.extend_from_slice(vs);
        self.leftover.sort_unstable();
    }

    fn claim(&mut self, vs: &[usize]) {
        self.leftover.retain(|v| !vs.contains(v));
    }
}

/// Trims every class to the smallest one, dropping highest ids; returns the drops.
fn rebalance(block: &mut MultipartiteWitness) -> Vec<usize> {
    let min = block.classes.iter().map(Vec::len).min().unwrap_or(0);
    let mut dropped = Vec::new();
    for c in &mut block.classes {
        c.sort_unstable();
        dropped.extend(c.drain(min..));
    }
    dropped
}

fn remove_all(class: &mut Vec<usize>, taken: &[usize]) {
    class.retain(|v| !taken.contains(v));
}

/// Largest-id-first trimming can leave a block empty; those are dropped.
fn finish_pass(cover: &mut Cover, p: usize) {
    cover.blocks.retain(|b| b.class_size() > 0);
    if cover
        .blocks
        .iter()
        .any(|b| b.class_size() != cover.class_size)
    {
        cover.resplit(p);
    }
}

/// Greedy initial cover of `universe`: blocks of class size `cfg.l` while the
/// leftover is at least `gamma |universe|` and extraction succeeds.
pub fn build_initial_cover(h: &Hypergraph, universe: &[usize], cfg: &PipelineConfig) -> Cover {
    let mut cover = Cover::empty(universe, cfg.l);
    let floor = cfg.gamma * Ratio::from_integer(universe.len() as u64);
    while Ratio::from_integer(cover.leftover.len() as u64) >= floor
        && cover.leftover.len() >= 4 * cfg.l
    {
        let Some(block) = find_complete_r_partite_in(h, &cover.leftover, cfg.l, cfg.extract_budget)
        else {
            break;
        };
        cover.claim(&block.vertices());
        cover.blocks.push(block);
    }
    cover
}

fn connected(h: &Hypergraph, kind: DensityKind, parts: &[&[usize]], eta: Density) -> bool {
    matches!(h.partite_density(kind, parts), Ok(d) if d >= eta * Ratio::from_integer(2))
}

/// Blocks with two classes tied to the leftover gain `4p` each: one pull
/// `(V_p, I, I, I)` per tied class, then the other two classes are trimmed.
pub fn extend_cover_two_classes(
    h: &Hypergraph,
    cover: &Cover,
    cfg: &PipelineConfig,
) -> (Cover, i64) {
    let mut next = cover.clone();
    let before = next.covered() as i64;
    let p = cfg.pull;
    for bi in 0..next.blocks.len() {
        if next.leftover.len() < 6 * p {
            break;
        }
        let tied: Vec<usize> = (0..4)
            .filter(|&c| {
                connected(
                    h,
                    DensityKind::OneVsRest,
                    &[&next.blocks[bi].classes[c], &next.leftover],
                    cfg.gamma,
                )
            })
            .take(2)
            .collect();
        if tied.len() < 2 {
            continue;
        }
        let mut pool = next.leftover.clone();
        let mut pulls = Vec::new();
        for &c in &tied {
            match extract_one_three(
                h,
                &next.blocks[bi].classes[c],
                &pool,
                cfg.eta,
                p,
                cfg.extract_budget,
            ) {
                Ok(Some(w)) => {
                    remove_all(&mut pool, &w.vertices());
                    pulls.push((c, w));
                }
                _ => break,
            }
        }
        if pulls.len() < 2 {
            continue;
        }
        for (c, w) in pulls {
            remove_all(&mut next.blocks[bi].classes[c], &w.classes[0]);
            next.claim(&w.vertices());
            next.blocks.push(w);
        }
        let dropped = rebalance(&mut next.blocks[bi]);
        next.release(&dropped);
    }
    finish_pass(&mut next, p);
    let gain = next.covered() as i64 - before;
    (next, gain)
}

/// Disjoint connected class pairs, one class from each block.
fn three_disjoint_pairs(ok: &[[bool; 4]; 4]) -> Option<[(usize, usize); 3]> {
    for perm in (0..4usize).permutations(4) {
        for skip in (0..4).rev() {
            let pairs: Vec<(usize, usize)> = (0..4)
                .filter(|&x| x != skip)
                .map(|x| (x, perm[x]))
                .collect();
            if pairs.iter().all(|&(x, y)| ok[x][y]) {
                return Some([pairs[0], pairs[1], pairs[2]]);
            }
        }
    }
    None
}

/// Pairs of blocks at least 9-sided to the leftover gain `4p` each via three
/// `(V_p^i, V_q^j, I, I)` pulls and a trim of the fourth classes.
pub fn extend_cover_nine_sided(
    h: &Hypergraph,
    cover: &Cover,
    cfg: &PipelineConfig,
) -> (Cover, i64) {
    let mut next = cover.clone();
    let before = next.covered() as i64;
    let p = cfg.pull;
    let nb = next.blocks.len();
    if nb < 2 || next.leftover.len() < 6 * p {
        return (next, 0);
    }
    let mut sided: BTreeMap<(usize, usize), [[bool; 4]; 4]> = BTreeMap::new();
    for (i, j) in (0..nb).tuple_combinations() {
        let mut ok = [[false; 4]; 4];
        let mut count = 0;
        for (x, y) in (0..4).cartesian_product(0..4) {
            ok[x][y] = connected(
                h,
                DensityKind::TwoVsRest,
                &[
                    &next.blocks[i].classes[x],
                    &next.blocks[j].classes[y],
                    &next.leftover,
                ],
                cfg.gamma,
            );
            count += usize::from(ok[x][y]);
        }
        if count >= 9 {
            sided.insert((i, j), ok);
        }
    }
    if sided.is_empty() {
        return (next, 0);
    }
    let Ok(aux) = Hypergraph::new(nb, 2, sided.keys().map(|&(i, j)| [i, j])) else {
        return (next, 0);
    };
    let chosen: Vec<(usize, usize)> = match min_degree_peel(&aux) {
        Ok(peeled) => greedy_matching(&peeled.graph)
            .edges()
            .iter()
            .map(|e| (peeled.kept[e[0]], peeled.kept[e[1]]))
            .collect(),
        Err(_) => Vec::new(),
    };
    for (i, j) in chosen {
        let Some(pairs) = three_disjoint_pairs(&sided[&(i, j)]) else {
            continue;
        };
        let mut pool = next.leftover.clone();
        let mut pulls = Vec::new();
        for &(x, y) in &pairs {
            let (bx, by) = (&next.blocks[i].classes[x], &next.blocks[j].classes[y]);
            match extract_two_two(h, bx, by, &pool, cfg.eta, p, cfg.extract_budget) {
                Ok(Some(w)) => {
                    remove_all(&mut pool, &w.vertices());
                    pulls.push((x, y, w));
                }
                _ => break,
            }
        }
        if pulls.len() < 3 {
            continue;
        }
        for (x, y, w) in pulls {
            remove_all(&mut next.blocks[i].classes[x], &w.classes[0]);
            remove_all(&mut next.blocks[j].classes[y], &w.classes[1]);
            next.claim(&w.vertices());
            next.blocks.push(w);
        }
        for b in [i, j] {
            let dropped = rebalance(&mut next.blocks[b]);
            next.release(&dropped);
        }
    }
    finish_pass(&mut next, p);
    let gain = next.covered() as i64 - before;
    (next, gain)
}

/// A link graph whose cover triple meets every edge, with the blocks involved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtTriple {
    pub blocks: [usize; 3],
    pub cover: Triple,
}

/// One pull of a triple extension: classes `(A_i, B_j, C_k)` of the three blocks.
pub type Pull = (usize, usize, usize);

/// Pull multiset for a classified link graph: `(pulls, max uses per block)`.
pub fn schedule(l: LinkGraph, verdict: Verdict, witness: &Witness) -> Option<Vec<Pull>> {
    match (verdict, witness) {
        (Verdict::PerfectMatching, Witness::Matching(m)) => Some(
            m.iter()
                .map(|&(i, j, k)| (i as usize, j as usize, k as usize))
                .collect(),
        ),
        (Verdict::H432, Witness::Pairs(ps)) => pair_schedule(l, ps, 4, 3),
        (Verdict::H4221, Witness::Pairs(ps)) => pair_schedule(l, ps, 2, 3),
        (Verdict::H3321, Witness::Pairs(ps)) => pair_schedule(l, ps, 2, 3),
        _ => None,
    }
}

/// Each pair is used `s` times; its third-class partners are allotted by a
/// Hall matching with every third class used at most `c` times.
fn pair_schedule(l: LinkGraph, ps: &PairSystem, s: usize, c: usize) -> Option<Vec<Pull>> {
    let nbrs: Vec<Vec<usize>> = ps
        .pairs
        .iter()
        .map(|&(x, y)| {
            (0..4)
                .filter(|&z| {
                    let (i, j, k) = ps.side.place(x as usize, y as usize, z);
                    l.has(i, j, k)
                })
                .collect()
        })
        .collect();
    let mut slot_pair = Vec::new();
    let adjacency: Vec<Vec<usize>> = nbrs
        .iter()
        .enumerate()
        .flat_map(|(pi, nb)| {
            slot_pair.extend(std::iter::repeat_n(pi, s));
            let row: Vec<usize> = nb
                .iter()
                .flat_map(|&z| (0..c).map(move |u| z * c + u))
                .collect();
            std::iter::repeat_n(row, s)
        })
        .collect();
    match hall_matching(&adjacency, 4 * c) {
        HallOutcome::Saturating(assign) => Some(
            assign
                .iter()
                .zip(&slot_pair)
                .map(|(&slot, &pi)| {
                    let (x, y) = ps.pairs[pi];
                    ps.side.place(x as usize, y as usize, slot / c)
                })
                .collect(),
        ),
        HallOutcome::Violator(_) => None,
    }
}

/// Net cover gain of a schedule in units of the pull size.
pub fn schedule_gain(pulls: &[Pull]) -> i64 {
    let mut uses = [[0i64; 4]; 3];
    for &(i, j, k) in pulls {
        uses[0][i] += 1;
        uses[1][j] += 1;
        uses[2][k] += 1;
    }
    let maxes: i64 = uses.iter().map(|u| *u.iter().max().unwrap()).sum();
    4 * (pulls.len() as i64 - maxes)
}

fn max_uses(pulls: &[Pull]) -> usize {
    let mut uses = [[0usize; 4]; 3];
    for &(i, j, k) in pulls {
        uses[0][i] += 1;
        uses[1][j] += 1;
        uses[2][k] += 1;
    }
    uses.iter()
        .flat_map(|u| u.iter())
        .copied()
        .max()
        .unwrap_or(0)
}

/// Runs every pull of `pulls` on blocks `t` or none of them; blocks are trimmed
/// back to balance afterwards. The cover is not re-split.
pub fn apply_schedule(
    h: &Hypergraph,
    cover: &mut Cover,
    t: [usize; 3],
    pulls: &[Pull],
    cfg: &PipelineConfig,
) -> bool {
    let p = cfg.pull;
    let mut work: Vec<MultipartiteWitness> = t.iter().map(|&b| cover.blocks[b].clone()).collect();
    let mut pool = cover.leftover.clone();
    let mut made = Vec::new();
    for &(i, j, k) in pulls {
        let w = extract_partite_volume(
            h,
            &work[0].classes[i],
            &work[1].classes[j],
            &work[2].classes[k],
            &pool,
            cfg.eta,
            p,
            cfg.extract_budget,
        );
        let Ok(Some(w)) = w else { return false };
        remove_all(&mut work[0].classes[i], &w.classes[0]);
        remove_all(&mut work[1].classes[j], &w.classes[1]);
        remove_all(&mut work[2].classes[k], &w.classes[2]);
        remove_all(&mut pool, &w.classes[3]);
        made.push(w);
    }
    for (slot, &b) in t.iter().enumerate() {
        cover.blocks[b] = work[slot].clone();
        let dropped = rebalance(&mut cover.blocks[b]);
        cover.release(&dropped);
    }
    for w in made {
        cover.claim(&w.vertices());
        cover.blocks.push(w);
    }
    true
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleStats {
    pub examined: usize,
    pub verdicts: BTreeMap<String, usize>,
    pub extended: usize,
    pub too_shallow: usize,
    pub failed_pulls: usize,
    pub lemma_violations: Vec<LinkGraph>,
}

/// Block triples whose link graph towards the leftover has at least 37 edges
/// and is not `H_ext` are extended by the case schedule; `H_ext` triples are returned.
pub fn extend_cover_triples(
    h: &Hypergraph,
    cover: &Cover,
    cfg: &PipelineConfig,
    round: usize,
) -> (Cover, i64, Vec<ExtTriple>, TripleStats) {
    let mut next = cover.clone();
    let before = next.covered() as i64;
    let p = cfg.pull;
    let mut stats = TripleStats::default();
    let mut ext = Vec::new();
    let nb = next.blocks.len();
    if nb < 3 || next.leftover.len() < 4 * p {
        return (next, 0, ext, stats);
    }
    let total = binomial(nb as u64, 3);
    let triples: Vec<[usize; 3]> = if total <= cfg.triple_samples as u128 {
        (0..nb)
            .tuple_combinations()
            .map(|(a, b, c)| [a, b, c])
            .collect()
    } else {
        let mut rng = rng::indexed(cfg.seed, "triples", round as u64);
        let mut picked: Vec<[usize; 3]> = (0..cfg.triple_samples)
            .map(|_| {
                let mut t: Vec<usize> = index::sample(&mut rng, nb, 3).into_vec();
                t.sort_unstable();
                [t[0], t[1], t[2]]
            })
            .collect();
        picked.sort_unstable();
        picked.dedup();
        picked
    };
    let mut touched = vec![false; nb];
    for t in triples {
        if t.iter().any(|&b| touched[b]) || next.leftover.len() < 4 * p {
            continue;
        }
        let blocks = [
            &next.blocks[t[0]].classes[..],
            &next.blocks[t[1]].classes[..],
            &next.blocks[t[2]].classes[..],
        ];
        let Ok(l) = build_link_graph(h, blocks, &next.leftover, cfg.eta) else {
            continue;
        };
        stats.examined += 1;
        let class = match l.classify() {
            Ok(c) => c,
            Err(Error::NotApplicable { .. }) => {
                *stats.verdicts.entry("below-37".into()).or_default() += 1;
                continue;
            }
            Err(_) => {
                stats.lemma_violations.push(l);
                continue;
            }
        };
        *stats
            .verdicts
            .entry(format!("{:?}", class.verdict))
            .or_default() += 1;
        if let Witness::Cover(cv) = class.witness {
            ext.push(ExtTriple {
                blocks: t,
                cover: cv,
            });
            continue;
        }
        let Some(pulls) = schedule(l, class.verdict, &class.witness) else {
            continue;
        };
        if max_uses(&pulls) * p > next.class_size {
            stats.too_shallow += 1;
            continue;
        }
        if !apply_schedule(h, &mut next, t, &pulls, cfg) {
            stats.failed_pulls += 1;
            continue;
        }
        stats.extended += 1;
        t.iter().for_each(|&b| touched[b] = true);
    }
    finish_pass(&mut next, p);
    let gain = next.covered() as i64 - before;
    (next, gain, ext, stats)
}

/// Density tests behind the extremal exit of the cover loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endgame {
    pub ext_triples: usize,
    /// `|V_2^g ∪ V_3^g ∪ V_4^g|`.
    pub rest_size: usize,
    pub rest_density: Option<Density>,
    /// Restriction density counting only edges with at most one vertex per block.
    pub rest_filtered_density: Option<Density>,
    pub rest_to_leftover_density: Option<Density>,
    pub candidate_size: usize,
    pub candidate_density: Option<Density>,
    pub extremal: bool,
}

/// Density of `H|_set` over edges meeting each block at most once.
pub fn filtered_density(
    h: &Hypergraph,
    set: &[usize],
    block_of: &[Option<usize>],
) -> Result<Density> {
    if set.len() < h.r() {
        return Err(Error::TooSmall {
            size: set.len(),
            r: h.r(),
        });
    }
    let mut inside = vec![false; h.n()];
    set.iter().for_each(|&v| inside[v] = true);
    let count = h
        .edges()
        .filter(|e| e.iter().all(|&v| inside[v]))
        .filter(|e| e.iter().filter_map(|&v| block_of[v]).all_unique())
        .count() as u64;
    let denom = u64::try_from(binomial(set.len() as u64, h.r() as u64))
        .map_err(|_| Error::TooLarge("filtered density".into()))?;
    Ok(Ratio::new(count, denom))
}

fn endgame(h: &Hypergraph, cover: &Cover, ext: &[ExtTriple], alpha: Density) -> Endgame {
    let mut block_of = vec![None; h.n()];
    for (i, b) in cover.blocks.iter().enumerate() {
        for v in b.vertices() {
            block_of[v] = Some(i);
        }
    }
    let mut rest = Vec::new();
    for t in ext {
        let cv = [t.cover.0, t.cover.1, t.cover.2];
        for (slot, &b) in t.blocks.iter().enumerate() {
            for (c, class) in cover.blocks[b].classes.iter().enumerate() {
                if c != cv[slot] as usize {
                    rest.extend_from_slice(class);
                }
            }
        }
    }
    rest.sort_unstable();
    rest.dedup();
    let mut candidate = rest.clone();
    candidate.extend_from_slice(&cover.leftover);
    candidate.sort_unstable();
    let candidate_density = h.density(&candidate).ok();
    let n = h.n() as u64;
    let big_enough =
        Ratio::from_integer(candidate.len() as u64) >= (r(3, 4) - alpha) * Ratio::from_integer(n);
    Endgame {
        ext_triples: ext.len(),
        rest_size: rest.len(),
        rest_density: h.density(&rest).ok(),
        rest_filtered_density: filtered_density(h, &rest, &block_of).ok(),
        rest_to_leftover_density: h
            .partite_density(DensityKind::OneVsRest, &[&rest, &cover.leftover])
            .ok(),
        candidate_size: candidate.len(),
        extremal: big_enough && candidate_density.is_some_and(|d| d < alpha),
        candidate_density,
    }
}

/// Edges of `H` with exactly three further vertices inside `set`, per vertex.
fn degrees_into(h: &Hypergraph, set: &[bool]) -> Vec<u64> {
    let mut deg = vec![0u64; h.n()];
    for e in h.edges() {
        let inside = e.iter().filter(|&&v| set[v]).count();
        if inside == 4 {
            e.iter().for_each(|&v| deg[v] += 1);
        } else if inside == 3 {
            let out = *e.iter().find(|&&v| !set[v]).unwrap();
            deg[out] += 1;
        }
    }
    deg
}

fn ceil_ratio(x: Density) -> usize {
    x.numer().div_ceil(*x.denom()) as usize
}

/// A set `B` with `|B| >= (3/4 - alpha) n` and `d_4(B) < alpha`, if the
/// low-degree heuristic with best-improvement swaps finds one.
pub fn detect_extremal(h: &Hypergraph, alpha: Density, iterations: usize) -> Option<Vec<usize>> {
    let n = h.n();
    let target = r(3, 4) - alpha;
    if target <= Ratio::from_integer(0) {
        return None;
    }
    let k = ceil_ratio(target * Ratio::from_integer(n as u64)).max(h.r());
    if k > n {
        return None;
    }
    let order: Vec<usize> = (0..n).sorted_by_key(|&v| (h.vertex_degree(v), v)).collect();
    let mut inb = vec![false; n];
    order[..k].iter().for_each(|&v| inb[v] = true);
    for _ in 0..iterations {
        let deg = degrees_into(h, &inb);
        let mut codeg: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for e in h.edges() {
            let outside: Vec<usize> = e.iter().copied().filter(|&v| !inb[v]).collect();
            if let [v] = outside[..] {
                for &u in e.iter().filter(|&&u| u != v) {
                    *codeg.entry((u, v)).or_default() += 1;
                }
            }
        }
        let mut best: Option<(i64, usize, usize)> = None;
        for u in (0..n).filter(|&u| inb[u]) {
            for v in (0..n).filter(|&v| !inb[v]) {
                let c = codeg.get(&(u, v)).copied().unwrap_or(0);
                let delta = deg[u] as i64 - (deg[v] as i64 - c);
                if delta > 0 && best.is_none_or(|(d, _, _)| delta > d) {
                    best = Some((delta, u, v));
                }
            }
        }
        let Some((_, u, v)) = best else { break };
        inb[u] = false;
        inb[v] = true;
    }
    let b: Vec<usize> = (0..n).filter(|&v| inb[v]).collect();
    let d = h.density(&b).ok()?;
    (Ratio::from_integer(b.len() as u64) >= target * Ratio::from_integer(n as u64) && d < alpha)
        .then_some(b)
}

/// `x^k` against `alpha` exactly, for `x = num/den`.
fn pow_cmp(num: u128, den: u128, k: u32, alpha: Density) -> Ordering {
    let lhs = num.pow(k) * u128::from(*alpha.denom());
    let rhs = u128::from(*alpha.numer()) * den.pow(k);
    lhs.cmp(&rhs)
}

/// Exceptional-vertex tests; `deg / total` is the relevant density.
pub mod exceptional {
    use super::*;

    /// `deg < (1 - sqrt(alpha)) total`.
    pub fn a_exceptional(deg: u64, total: u64, alpha: Density) -> bool {
        deg < total
            && pow_cmp(u128::from(total - deg), u128::from(total), 2, alpha) == Ordering::Greater
    }

    /// `deg < alpha^(1/3) total`.
    pub fn a_strongly(deg: u64, total: u64, alpha: Density) -> bool {
        pow_cmp(u128::from(deg), u128::from(total), 3, alpha) == Ordering::Less
    }

    /// `deg > sqrt(alpha) total`.
    pub fn b_exceptional(deg: u64, total: u64, alpha: Density) -> bool {
        pow_cmp(u128::from(deg), u128::from(total), 2, alpha) == Ordering::Greater
    }

    /// `deg > (1 - alpha^(1/3)) total`.
    pub fn b_strongly(deg: u64, total: u64, alpha: Density) -> bool {
        deg >= total
            || pow_cmp(u128::from(total - deg), u128::from(total), 3, alpha) == Ordering::Less
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalTrace {
    pub b_in: usize,
    pub moved: usize,
    pub x_a: usize,
    pub sx_a: usize,
    pub x_b: usize,
    pub sx_b: usize,
    pub exchanges: usize,
    pub covering_edges: usize,
    pub t1_triples: usize,
    pub t2_triples: usize,
    pub t1_attempts: usize,
    pub failed_stage: Option<String>,
}

struct Sides {
    ina: Vec<bool>,
    free: Vec<bool>,
}

impl Sides {
    fn a(&self) -> Vec<usize> {
        (0..self.ina.len())
            .filter(|&v| self.free[v] && self.ina[v])
            .collect()
    }

    fn b(&self) -> Vec<usize> {
        (0..self.ina.len())
            .filter(|&v| self.free[v] && !self.ina[v])
            .collect()
    }
}

/// Per-vertex degree into `(B choose 3)` (excluding the vertex itself).
fn b_degrees(h: &Hypergraph, sides: &Sides) -> Vec<u64> {
    let inb: Vec<bool> = (0..h.n()).map(|v| sides.free[v] && !sides.ina[v]).collect();
    degrees_into(h, &inb)
}

struct Classes {
    x_a: Vec<usize>,
    sx_a: Vec<usize>,
    x_b: Vec<usize>,
    sx_b: Vec<usize>,
}

fn classify_vertices(h: &Hypergraph, sides: &Sides, alpha: Density) -> Classes {
    let deg = b_degrees(h, sides);
    let (a, b) = (sides.a(), sides.b());
    let total = binomial(b.len() as u64, 3) as u64;
    let mut out = Classes {
        x_a: vec![],
        sx_a: vec![],
        x_b: vec![],
        sx_b: vec![],
    };
    if total == 0 {
        return out;
    }
    for &v in &a {
        if exceptional::a_strongly(deg[v], total, alpha) {
            out.sx_a.push(v);
        } else if exceptional::a_exceptional(deg[v], total, alpha) {
            out.x_a.push(v);
        }
    }
    for &v in &b {
        if exceptional::b_strongly(deg[v], total, alpha) {
            out.sx_b.push(v);
        } else if exceptional::b_exceptional(deg[v], total, alpha) {
            out.x_b.push(v);
        }
    }
    out
}

/// Lexicographically first edge through `v` whose other vertices are free and
/// fit the per-side counts; typical fillers are preferred.
fn pick_edge(
    h: &Hypergraph,
    v: usize,
    sides: &Sides,
    need_a: usize,
    need_b: usize,
    avoid: &[bool],
) -> Option<Vec<usize>> {
    for strict in [true, false] {
        for e in h.incident(v) {
            let e = h.edge(e);
            let others: Vec<usize> = e.iter().copied().filter(|&u| u != v).collect();
            if others
                .iter()
                .any(|&u| !sides.free[u] || (strict && avoid[u]))
            {
                continue;
            }
            let na = others.iter().filter(|&&u| sides.ina[u]).count();
            if na == need_a && others.len() - na == need_b {
                return Some(e.to_vec());
            }
        }
    }
    None
}

/// Rebalance, exceptional-vertex covering, random triples and a Hall finish.
pub fn extremal_matcher(
    h: &Hypergraph,
    b: &[usize],
    cfg: &PipelineConfig,
) -> Result<(Option<Matching>, ExtremalTrace)> {
    let n = h.n();
    if !n.is_multiple_of(4) {
        return Err(Error::Indivisible { n, by: 4 });
    }
    let alpha = cfg.alpha;
    let mut trace = ExtremalTrace {
        b_in: b.len(),
        ..Default::default()
    };
    let mut sides = Sides {
        ina: vec![true; n],
        free: vec![true; n],
    };
    b.iter().for_each(|&v| sides.ina[v] = false);

    // (1) |A| = n/4
    let deg = b_degrees(h, &sides);
    let quarter = n / 4;
    let a_now = sides.a().len();
    if a_now > quarter {
        let mv: Vec<usize> = sides
            .a()
            .into_iter()
            .sorted_by_key(|&v| (deg[v], v))
            .take(a_now - quarter)
            .collect();
        mv.iter().for_each(|&v| sides.ina[v] = false);
        trace.moved = mv.len();
    } else if a_now < quarter {
        let mv: Vec<usize> = sides
            .b()
            .into_iter()
            .sorted_by_key(|&v| (std::cmp::Reverse(deg[v]), v))
            .take(quarter - a_now)
            .collect();
        mv.iter().for_each(|&v| sides.ina[v] = true);
        trace.moved = mv.len();
    }

    // (2), (3)
    let mut cls = classify_vertices(h, &sides, alpha);
    while let (Some(&a), Some(&bb)) = (cls.sx_a.first(), cls.sx_b.first()) {
        sides.ina[a] = false;
        sides.ina[bb] = true;
        trace.exchanges += 1;
        cls = classify_vertices(h, &sides, alpha);
        if trace.exchanges > n {
            break;
        }
    }
    trace.x_a = cls.x_a.len();
    trace.sx_a = cls.sx_a.len();
    trace.x_b = cls.x_b.len();
    trace.sx_b = cls.sx_b.len();

    // (4)
    let mut atypical = vec![false; n];
    for &v in cls
        .x_a
        .iter()
        .chain(&cls.sx_a)
        .chain(&cls.x_b)
        .chain(&cls.sx_b)
    {
        atypical[v] = true;
    }
    let mut matching = Matching::default();
    let take = |sides: &mut Sides, e: &[usize], m: &mut Matching| {
        e.iter().for_each(|&u| sides.free[u] = false);
        m.push(e);
    };
    let fail = |mut trace: ExtremalTrace, stage: &str| {
        trace.failed_stage = Some(stage.to_string());
        Ok((None, trace))
    };
    if !cls.sx_b.is_empty() {
        for &v in &cls.sx_b {
            if !sides.free[v] {
                continue;
            }
            let Some(e) = pick_edge(h, v, &sides, 0, 3, &atypical) else {
                return fail(trace, "cover-sx-b");
            };
            take(&mut sides, &e, &mut matching);
            let companion = sides.b().into_iter().find_map(|u| {
                let e = pick_edge(h, u, &sides, 2, 1, &atypical)?;
                (!atypical[u] || !sides.b().iter().any(|&w| !atypical[w])).then_some(e)
            });
            let Some(c) = companion else {
                return fail(trace, "cover-sx-b-companion");
            };
            take(&mut sides, &c, &mut matching);
        }
    } else {
        for &v in &cls.sx_a {
            if !sides.free[v] {
                continue;
            }
            let Some(e) = pick_edge(h, v, &sides, 0, 3, &atypical) else {
                return fail(trace, "cover-sx-a");
            };
            take(&mut sides, &e, &mut matching);
        }
    }
    for &v in &cls.x_a {
        if sides.free[v] {
            let Some(e) = pick_edge(h, v, &sides, 0, 3, &atypical) else {
                return fail(trace, "cover-x-a");
            };
            take(&mut sides, &e, &mut matching);
        }
    }
    for &v in &cls.x_b {
        if sides.free[v] {
            let Some(e) = pick_edge(h, v, &sides, 1, 2, &atypical) else {
                return fail(trace, "cover-x-b");
            };
            take(&mut sides, &e, &mut matching);
        }
    }
    trace.covering_edges = matching.len();

    // (5), (6)
    let (a2, b2) = (sides.a(), sides.b());
    if b2.len() != 3 * a2.len() {
        return fail(trace, "balance");
    }
    if a2.is_empty() {
        return Ok((Some(matching), trace));
    }
    let fourth_root = (alpha.numer().to_owned() as f64 / *alpha.denom() as f64).powf(0.25);
    let rate = (100.0 * fourth_root).min(1.0);
    let t1_len = ((rate * b2.len() as f64) as usize / 3).min(a2.len());
    // good: at least (1 - 40 alpha^(1/4)) |A''| partners
    let good_bar = ((1.0 - 40.0 * fourth_root).max(0.0) * a2.len() as f64)
        .ceil()
        .max(1.0) as usize;
    let partners = |t: &[usize]| {
        a2.iter()
            .filter(|&&a| h.contains(&[t[0], t[1], t[2], a]))
            .count()
    };
    let mut rng = rng::substream(cfg.seed, "extremal-t1");
    for attempt in 0..cfg.t1_retries.max(1) {
        trace.t1_attempts = attempt + 1;
        let mut shuffled = b2.clone();
        shuffled.shuffle(&mut rng);
        let t1: Vec<Vec<usize>> = shuffled[..3 * t1_len]
            .chunks(3)
            .map(|c| c.iter().copied().sorted().collect())
            .collect();
        let rest: Vec<usize> = shuffled[3 * t1_len..].iter().copied().sorted().collect();
        let t2 = if rest.is_empty() {
            Vec::new()
        } else {
            let good: Vec<Vec<usize>> = (0..rest.len())
                .combinations(3)
                .filter(|c| partners(&[rest[c[0]], rest[c[1]], rest[c[2]]]) >= good_bar)
                .collect();
            let Ok(g3) = Hypergraph::new(rest.len(), 3, &good) else {
                continue;
            };
            match has_perfect_matching(&g3) {
                Ok(Some(m)) => m
                    .edges()
                    .iter()
                    .map(|e| e.iter().map(|&i| rest[i]).collect())
                    .collect(),
                _ => continue,
            }
        };
        let triples: Vec<Vec<usize>> = t1.iter().chain(&t2).cloned().collect();
        let adjacency: Vec<Vec<usize>> = triples
            .iter()
            .map(|t| {
                (0..a2.len())
                    .filter(|&i| h.contains(&[t[0], t[1], t[2], a2[i]]))
                    .collect()
            })
            .collect();
        if let HallOutcome::Saturating(assign) = hall_matching(&adjacency, a2.len()) {
            trace.t1_triples = t1.len();
            trace.t2_triples = t2.len();
            let mut out = matching.clone();
            for (t, &ai) in triples.iter().zip(&assign) {
                out.push(&[t[0], t[1], t[2], a2[ai]]);
            }
            return Ok((Some(out), trace));
        }
    }
    fail(trace, "hall")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Path {
    Extremal,
    NonExtremal,
    ExactFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    /// Vertices matched or covered after the stage.
    pub vertices: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverStep {
    pub round: usize,
    pub op: String,
    pub gain: i64,
    pub covered: usize,
    pub leftover: usize,
    pub blocks: usize,
    pub class_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub path: Path,
    pub n: usize,
    pub found: bool,
    pub stages: Vec<Stage>,
    pub cover_trace: Vec<CoverStep>,
    pub absorber_stats: Option<AbsorberStats>,
    pub fallback_used: bool,
    pub fallback_outcome: Option<String>,
    pub extremal: Option<ExtremalTrace>,
    pub triples: TripleStats,
    pub endgame: Option<Endgame>,
}

impl PipelineReport {
    fn new(n: usize) -> Self {
        PipelineReport {
            path: Path::NonExtremal,
            n,
            found: false,
            stages: Vec::new(),
            cover_trace: Vec::new(),
            absorber_stats: None,
            fallback_used: false,
            fallback_outcome: None,
            extremal: None,
            triples: TripleStats::default(),
            endgame: None,
        }
    }

    fn stage(&mut self, name: &str, vertices: usize, note: impl Into<String>) {
        self.stages.push(Stage {
            name: name.into(),
            vertices,
            note: note.into(),
        });
    }
}

fn merge_triples(into: &mut TripleStats, from: TripleStats) {
    into.examined += from.examined;
    into.extended += from.extended;
    into.too_shallow += from.too_shallow;
    into.failed_pulls += from.failed_pulls;
    into.lemma_violations.extend(from.lemma_violations);
    for (k, v) in from.verdicts {
        *into.verdicts.entry(k).or_default() += v;
    }
}

/// Runs the extend ops until the leftover is small or no op gains.
pub fn grow_cover(
    h: &Hypergraph,
    mut cover: Cover,
    cfg: &PipelineConfig,
    report: &mut PipelineReport,
) -> (Cover, Vec<ExtTriple>) {
    let universe = cover.covered() + cover.leftover.len();
    let floor = cfg.gamma * Ratio::from_integer(universe as u64);
    let mut last_ext = Vec::new();
    let step = |report: &mut PipelineReport, round: usize, op: &str, gain: i64, c: &Cover| {
        report.cover_trace.push(CoverStep {
            round,
            op: op.into(),
            gain,
            covered: c.covered(),
            leftover: c.leftover.len(),
            blocks: c.blocks.len(),
            class_size: c.class_size,
        });
    };
    step(report, 0, "initial", 0, &cover);
    for round in 1..=cfg.max_rounds {
        if Ratio::from_integer(cover.leftover.len() as u64) < floor {
            break;
        }
        let mut gained = false;
        let (c, g) = extend_cover_two_classes(h, &cover, cfg);
        if g > 0 {
            step(report, round, "two-classes", g, &c);
            cover = c;
            gained = true;
        }
        let (c, g) = extend_cover_nine_sided(h, &cover, cfg);
        if g > 0 {
            step(report, round, "nine-sided", g, &c);
            cover = c;
            gained = true;
        }
        let (c, g, ext, stats) = extend_cover_triples(h, &cover, cfg, round);
        merge_triples(&mut report.triples, stats);
        last_ext = ext;
        if g > 0 {
            step(report, round, "triples", g, &c);
            cover = c;
            gained = true;
        }
        // leftover blocks may fit again after the pulls
        if cover.leftover.len() >= 4 * cover.class_size {
            let before = cover.covered();
            while let Some(b) =
                find_complete_r_partite_in(h, &cover.leftover, cover.class_size, cfg.extract_budget)
            {
                cover.claim(&b.vertices());
                cover.blocks.push(b);
            }
            if cover.covered() > before {
                let g = (cover.covered() - before) as i64;
                step(report, round, "refill", g, &cover);
                gained = true;
            }
        }
        if !gained {
            break;
        }
    }
    (cover, last_ext)
}

fn exact_fallback(
    h: &Hypergraph,
    cfg: &PipelineConfig,
    report: &mut PipelineReport,
) -> Option<Matching> {
    report.fallback_used = true;
    report.path = Path::ExactFallback;
    if h.n() > cfg.fallback_max_n {
        report.fallback_outcome = Some("skipped".into());
        return None;
    }
    match perfect_matching_budgeted(h, cfg.fallback_budget) {
        Ok((PmSearch::Found(m), _)) => {
            report.fallback_outcome = Some("found".into());
            Some(m)
        }
        Ok((PmSearch::Absent, _)) => {
            report.fallback_outcome = Some("absent".into());
            None
        }
        Ok((PmSearch::TimedOut, _)) => {
            report.fallback_outcome = Some("timed-out".into());
            None
        }
        Err(e) => {
            report.fallback_outcome = Some(e.to_string());
            None
        }
    }
}

fn non_extremal(
    h: &Hypergraph,
    cfg: &PipelineConfig,
    report: &mut PipelineReport,
) -> Result<std::result::Result<Matching, Option<Vec<usize>>>> {
    let n = h.n();
    let am: AbsorbingMatching = build_absorbing_matching(
        h,
        &AbsorbConfig {
            seed: cfg.seed,
            ..cfg.absorb.clone()
        },
    )?;
    report.absorber_stats = Some(am.stats.clone());
    let base_vs = am.base_vertices();
    report.stage(
        "absorbing-matching",
        base_vs.len(),
        format!("{} blocks", am.blocks.len()),
    );
    let mut in_base = vec![false; n];
    base_vs.iter().for_each(|&v| in_base[v] = true);
    let universe: Vec<usize> = (0..n).filter(|&v| !in_base[v]).collect();
    let cover = build_initial_cover(h, &universe, cfg);
    report.stage(
        "initial-cover",
        cover.covered(),
        format!("{} blocks", cover.blocks.len()),
    );
    let (cover, ext) = grow_cover(h, cover, cfg, report);
    report.stage(
        "grown-cover",
        cover.covered(),
        format!("leftover {}", cover.leftover.len()),
    );
    if !ext.is_empty() {
        let eg = endgame(h, &cover, &ext, cfg.alpha);
        let exit = eg.extremal;
        report.endgame = Some(eg);
        if exit {
            let mut cand: Vec<usize> = cover.leftover.clone();
            for t in &ext {
                let cv = [t.cover.0, t.cover.1, t.cover.2];
                for (slot, &b) in t.blocks.iter().enumerate() {
                    for (c, class) in cover.blocks[b].classes.iter().enumerate() {
                        if c != cv[slot] as usize {
                            cand.extend_from_slice(class);
                        }
                    }
                }
            }
            cand.sort_unstable();
            cand.dedup();
            return Ok(Err(Some(cand)));
        }
    }
    let mut partial = cover.matching();
    let rest = h.induce(&cover.leftover);
    let extra = greedy_matching(&rest);
    for e in extra.edges() {
        let orig: Vec<usize> = e.iter().map(|&i| cover.leftover[i]).collect();
        partial.push(&orig);
    }
    let mut used = vec![false; n];
    partial.vertices().iter().for_each(|&v| used[v] = true);
    let w: Vec<usize> = cover
        .leftover
        .iter()
        .copied()
        .filter(|&v| !used[v])
        .collect();
    report.stage(
        "leftover-greedy",
        partial.len() * 4,
        format!("{} left", w.len()),
    );
    match absorb(h, &am, &partial, &w) {
        Ok(m) => {
            report.stage("absorb", m.len() * 4, "ok");
            Ok(Ok(m))
        }
        Err(e) => {
            report.stage("absorb", partial.len() * 4, e.to_string());
            Ok(Err(None))
        }
    }
}

/// Full solver: extremal track when a sparse `B` is found, otherwise absorb,
/// cover and absorb the leftover; exact search when both fail.
pub fn solve_pipeline(
    h: &Hypergraph,
    cfg: &PipelineConfig,
) -> Result<(Option<Matching>, PipelineReport)> {
    cfg.validate()?;
    let n = h.n();
    if h.r() != 4 {
        return Err(Error::InvalidHypergraph(format!(
            "expected a 4-graph, got r = {}",
            h.r()
        )));
    }
    if !n.is_multiple_of(4) {
        return Err(Error::Indivisible { n, by: 4 });
    }
    let mut report = PipelineReport::new(n);
    let mut extremal_b = detect_extremal(h, cfg.alpha, cfg.detect_iterations);
    report.stage(
        "detect-extremal",
        0,
        match &extremal_b {
            Some(b) => format!("B of size {}", b.len()),
            None => "not extremal".into(),
        },
    );
    let mut result = None;
    if extremal_b.is_none() {
        match non_extremal(h, cfg, &mut report)? {
            Ok(m) => result = Some(m),
            Err(cand) => extremal_b = cand,
        }
    }
    if result.is_none() {
        if let Some(b) = extremal_b {
            report.path = Path::Extremal;
            let (m, trace) = extremal_matcher(h, &b, cfg)?;
            report.stage(
                "extremal-matcher",
                m.as_ref().map_or(0, |m| m.len() * 4),
                format!("{:?}", trace.failed_stage),
            );
            report.extremal = Some(trace);
            result = m;
        }
    }
    let result = match result {
        Some(m) if h.validate_matching(&m).perfect => Some(m),
        _ => exact_fallback(h, cfg, &mut report),
    };
    let result = result
        .filter(|m| h.validate_matching(m).perfect)
        .map(Matching::canonical);
    report.found = result.is_some();
    Ok((result, report))
}
