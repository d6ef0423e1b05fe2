//! Seeded verification campaigns with JSON summaries.
//!
//! Work is split into indexed chunks, each drawing from its own substream, and
//! results are merged in index order, so a summary depends only on its params.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use itertools::Itertools;
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::absorb::{absorb, build_absorbing_matching, AbsorbConfig};
use crate::construct::{
    extremal_construction, h_ext_canonical, pattern_witness, random_dense_hypergraph,
    random_link_graph, threshold, Fill,
};
use crate::error::{Error, Result};
use crate::extract::{
    extract_one_three, extract_partite_volume, extract_two_two, find_complete_r_partite,
    MultipartiteWitness,
};
use crate::format::to_hg;
use crate::hypergraph::{binomial, Hypergraph, Matching};
use crate::link::{GroupElement, LinkGraph, PatternKind, Verdict, EXT_EDGES};
use crate::pipeline::{solve_pipeline, Path as PipelinePath, PipelineConfig};
use crate::rng::{self, Rng};
use crate::solve::{has_perfect_matching, max_matching_exact};

const CHUNK: u64 = 1024;
/// Counterexamples kept in a summary; all are written as artifacts.
const KEEP: usize = 16;

/// Shared run options.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    /// Directory for counterexample artifacts.
    pub artifacts: Option<PathBuf>,
}

fn par_map<T: Send>(opts: &RunOptions, count: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    let run = || (0..count).into_par_iter().map(&f).collect::<Vec<T>>();
    match rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => (0..count).map(&f).collect(),
    }
}

fn write_artifact(opts: &RunOptions, name: &str, body: &str) -> Result<()> {
    if let Some(dir) = &opts.artifacts {
        fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(dir.join(name), body).map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

fn bump(map: &mut BTreeMap<String, u64>, key: impl Into<String>, by: u64) {
    *map.entry(key.into()).or_default() += by;
}

fn merge(into: &mut BTreeMap<String, u64>, from: BTreeMap<String, u64>) {
    for (k, v) in from {
        bump(into, k, v);
    }
}

fn verdict_key(v: Verdict) -> String {
    match v {
        Verdict::PerfectMatching => "perfect-matching",
        Verdict::H432 => "h432",
        Verdict::H4221 => "h4221",
        Verdict::H3321 => "h3321",
        Verdict::Ext => "ext",
    }
    .to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma37Params {
    pub samples: u64,
    pub mutants: u64,
    /// Move distance of the exhaustive strata around `H_ext`.
    pub strata_depth: usize,
    /// Largest number of bits added to `H_ext` in the superset strata.
    pub superset_depth: usize,
    pub seed: u64,
}

impl Default for Lemma37Params {
    fn default() -> Self {
        Lemma37Params {
            samples: 1_000_000,
            mutants: 100_000,
            strata_depth: 2,
            superset_depth: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: u64,
    pub not_applicable: u64,
    pub verdicts: BTreeMap<String, u64>,
    pub witness_failures: u64,
    /// Canonical forms of masks that violated the lemma, smallest first.
    pub violations: Vec<LinkGraph>,
    pub violation_count: u64,
}

impl Tally {
    fn record(&mut self, l: LinkGraph) {
        self.checked += 1;
        match l.classify() {
            Ok(c) => {
                if !c.verify(l) || (c.verdict == Verdict::Ext && l.perfect_matching().is_some()) {
                    self.witness_failures += 1;
                }
                bump(&mut self.verdicts, verdict_key(c.verdict), 1);
            }
            Err(Error::NotApplicable { .. }) => self.not_applicable += 1,
            Err(_) => {
                self.violation_count += 1;
                self.violations.push(l.canonical_form());
            }
        }
    }

    fn absorb(&mut self, other: Tally) {
        self.checked += other.checked;
        self.not_applicable += other.not_applicable;
        self.witness_failures += other.witness_failures;
        self.violation_count += other.violation_count;
        merge(&mut self.verdicts, other.verdicts);
        self.violations.extend(other.violations);
        self.violations.sort_unstable();
        self.violations.dedup();
        self.violations.truncate(KEEP);
    }

    pub fn clean(&self) -> bool {
        self.violation_count == 0 && self.witness_failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub name: String,
    pub size: u64,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma37Summary {
    pub params: Lemma37Params,
    pub sampled: Tally,
    pub mutated: Tally,
    pub strata: Vec<Stratum>,
    pub violations: u64,
}

/// `H_ext` or a pattern witness, moved by a random symmetry and `1..=4` bit
/// flips, topped up to 37 edges.
pub fn mutant(rng: &mut Rng) -> LinkGraph {
    let base = match rng.gen_range(0..4) {
        0 => h_ext_canonical(),
        k => {
            let kind = PatternKind::ALL[k - 1];
            let fill = Fill::Random(rng.gen_range(0.3..0.9));
            pattern_witness(kind, fill, rng.gen())
        }
    };
    let mut mask = base.apply(&GroupElement::random(rng)).0;
    for _ in 0..rng.gen_range(1..=4) {
        mask ^= 1 << rng.gen_range(0..64);
    }
    while mask.count_ones() < EXT_EDGES {
        mask |= 1 << rng.gen_range(0..64);
    }
    LinkGraph(mask)
}

/// Every mask at move distance exactly `d` from `H_ext` (`d` bits cleared, `d` set).
pub fn moved_stratum(d: usize) -> impl Iterator<Item = LinkGraph> {
    let hext = h_ext_canonical().0;
    let on: Vec<u32> = (0..64).filter(|b| hext >> b & 1 == 1).collect();
    let off: Vec<u32> = (0..64).filter(|b| hext >> b & 1 == 0).collect();
    let offs: Vec<Vec<u32>> = off.into_iter().combinations(d).collect();
    on.into_iter().combinations(d).flat_map(move |clear| {
        let cleared = clear.iter().fold(hext, |m, &b| m & !(1 << b));
        offs.clone()
            .into_iter()
            .map(move |set| LinkGraph(set.iter().fold(cleared, |m, &b| m | 1 << b)))
    })
}

/// Every mask obtained from `H_ext` by setting exactly `k` further bits.
pub fn superset_stratum(k: usize) -> impl Iterator<Item = LinkGraph> {
    let hext = h_ext_canonical().0;
    (0..64u32)
        .filter(move |b| hext >> b & 1 == 0)
        .combinations(k)
        .map(move |set| LinkGraph(set.iter().fold(hext, |m, &b| m | 1 << b)))
}

fn tally_chunks(
    opts: &RunOptions,
    total: u64,
    name: &str,
    seed: u64,
    gen: fn(&mut Rng) -> LinkGraph,
) -> Tally {
    let chunks = total.div_ceil(CHUNK);
    let parts = par_map(opts, chunks, |c| {
        let mut rng = rng::indexed(seed, name, c);
        let mut t = Tally::default();
        for _ in c * CHUNK..((c + 1) * CHUNK).min(total) {
            t.record(gen(&mut rng));
        }
        t
    });
    parts.into_iter().fold(Tally::default(), |mut a, b| {
        a.absorb(b);
        a
    })
}

fn tally_all(opts: &RunOptions, masks: Vec<LinkGraph>) -> Tally {
    let chunks: Vec<&[LinkGraph]> = masks.chunks(CHUNK as usize).collect();
    let parts = par_map(opts, chunks.len() as u64, |c| {
        let mut t = Tally::default();
        chunks[c as usize].iter().for_each(|&l| t.record(l));
        t
    });
    parts.into_iter().fold(Tally::default(), |mut a, b| {
        a.absorb(b);
        a
    })
}

pub fn lemma37(p: &Lemma37Params, opts: &RunOptions) -> Result<Lemma37Summary> {
    let sampled = tally_chunks(opts, p.samples, "lemma37-sample", p.seed, |rng| {
        random_link_graph(EXT_EDGES, rng)
    });
    let mutated = tally_chunks(opts, p.mutants, "lemma37-mutant", p.seed, mutant);
    let mut strata = Vec::new();
    for d in 1..=p.strata_depth {
        let masks: Vec<LinkGraph> = moved_stratum(d).collect();
        strata.push(Stratum {
            name: format!("moved-{d}"),
            size: masks.len() as u64,
            tally: tally_all(opts, masks),
        });
    }
    for k in 1..=p.superset_depth {
        let masks: Vec<LinkGraph> = superset_stratum(k).collect();
        strata.push(Stratum {
            name: format!("superset-{k}"),
            size: masks.len() as u64,
            tally: tally_all(opts, masks),
        });
    }
    let tallies = std::iter::once(&sampled)
        .chain([&mutated])
        .chain(strata.iter().map(|s| &s.tally));
    let mut violations = 0;
    for t in tallies {
        violations += t.violation_count + t.witness_failures;
        for l in &t.violations {
            write_artifact(opts, &format!("lemma37-{l}.hex"), &format!("{l}\n"))?;
        }
    }
    Ok(Lemma37Summary {
        params: p.clone(),
        sampled,
        mutated,
        strata,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub n: usize,
    pub threshold: u64,
    pub min_degree: u64,
    pub max_matching: usize,
    pub optimal: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightnessSummary {
    pub rows: Vec<TightnessRow>,
    pub violations: u64,
}

/// Exact maximum matching and minimum degree of the construction.
pub fn tightness(ns: &[usize], opts: &RunOptions) -> Result<TightnessSummary> {
    let rows = par_map(opts, ns.len() as u64, |i| -> Result<TightnessRow> {
        let n = ns[i as usize];
        let h = extremal_construction(n)?;
        let t = threshold(n)?;
        let res = max_matching_exact(&h, u64::MAX)?;
        let min_degree = h.min_degree(1)?;
        Ok(TightnessRow {
            n,
            threshold: t,
            min_degree,
            max_matching: res.matching.len(),
            optimal: res.optimal,
            ok: res.optimal && res.matching.len() == n / 4 - 1 && min_degree + 1 == t,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let violations = rows.iter().filter(|r| !r.ok).count() as u64;
    Ok(TightnessSummary { rows, violations })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverParams {
    pub n_max: usize,
    pub trials: u64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            n_max: 12,
            trials: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub params: SolverParams,
    pub agreements: u64,
    /// Instances per maximum matching size.
    pub by_size: BTreeMap<usize, u64>,
    pub perfect: u64,
    pub violations: u64,
}

/// Unpruned search: the lowest free vertex is left out or covered by each
/// of its edges in turn.
pub fn naive_max_matching(h: &Hypergraph) -> usize {
    fn go(h: &Hypergraph, v: usize, used: &mut [bool]) -> usize {
        let Some(v) = (v..h.n()).find(|&u| !used[u]) else {
            return 0;
        };
        used[v] = true;
        let mut best = go(h, v + 1, used);
        used[v] = false;
        for e in h.incident(v) {
            let e = h.edge(e);
            if e.iter().all(|&u| !used[u]) {
                e.iter().for_each(|&u| used[u] = true);
                best = best.max(1 + go(h, v + 1, used));
                e.iter().for_each(|&u| used[u] = false);
            }
        }
        best
    }
    go(h, 0, &mut vec![false; h.n()])
}

/// Random 4-graph on `4..=n_max` vertices with a random edge rate.
pub fn random_small_hypergraph(n_max: usize, rng: &mut Rng) -> Hypergraph {
    let n = rng.gen_range(4..=n_max.max(4));
    let rate: f64 = rng.gen_range(0.02..0.6);
    let edges: Vec<Vec<usize>> = (0..n)
        .combinations(4)
        .filter(|_| rng.gen_bool(rate))
        .collect();
    Hypergraph::new(n, 4, edges).expect("valid edges")
}

pub fn solver(p: &SolverParams, opts: &RunOptions) -> Result<SolverSummary> {
    let rows = par_map(
        opts,
        p.trials,
        |i| -> Result<(usize, bool, bool, Option<Hypergraph>)> {
            let mut rng = rng::indexed(p.seed, "solver", i);
            let h = random_small_hypergraph(p.n_max, &mut rng);
            let fast = max_matching_exact(&h, u64::MAX)?;
            let slow = naive_max_matching(&h);
            let valid = h.validate_matching(&fast.matching).valid;
            let agree = valid && fast.optimal && fast.matching.len() == slow;
            let perfect = h.n().is_multiple_of(4) && slow == h.n() / 4;
            Ok((slow, agree, perfect, (!agree).then_some(h)))
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut out = SolverSummary {
        params: p.clone(),
        agreements: 0,
        by_size: BTreeMap::new(),
        perfect: 0,
        violations: 0,
    };
    for (i, (size, agree, perfect, bad)) in rows.into_iter().enumerate() {
        *out.by_size.entry(size).or_default() += 1;
        out.perfect += u64::from(perfect);
        if agree {
            out.agreements += 1;
        } else {
            out.violations += 1;
            if let Some(h) = bad {
                write_artifact(opts, &format!("solver-{}-{i}.hg", p.seed), &to_hg(&h))?;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbParams {
    pub n: usize,
    /// Minimum degree as a fraction `num / den` of `C(n-1, 3)`.
    pub degree_num: u64,
    pub degree_den: u64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for AbsorbParams {
    fn default() -> Self {
        AbsorbParams {
            n: 40,
            degree_num: 3,
            degree_den: 5,
            samples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbSummary {
    pub params: AbsorbParams,
    pub min_degree: u64,
    pub blocks: usize,
    pub base_edges: usize,
    pub trials: usize,
    pub registered: usize,
    /// Registered sets whose absorption covered exactly `V(M) ∪ W`.
    pub exact_covers: usize,
    /// Unions of two registered sets on distinct blocks, absorbed together.
    pub pair_checks: usize,
    pub pair_exact: usize,
    pub violations: u64,
}

fn covers_exactly(h: &Hypergraph, m: &Matching, want: &[usize]) -> bool {
    let mut got = m.vertices();
    got.sort_unstable();
    let mut want = want.to_vec();
    want.sort_unstable();
    h.validate_matching(m).valid && got == want
}

pub fn absorb_campaign(p: &AbsorbParams, opts: &RunOptions) -> Result<AbsorbSummary> {
    let n = p.n;
    let target = (binomial(n as u64 - 1, 3) as u64 * p.degree_num).div_ceil(p.degree_den);
    let h = random_dense_hypergraph(n, target, p.seed)?;
    let cfg = AbsorbConfig {
        trials: p.samples,
        seed: p.seed,
        ..AbsorbConfig::default()
    };
    let am = build_absorbing_matching(&h, &cfg)?;
    let base = am.base_vertices();
    let mut exact = 0;
    let mut failures = Vec::new();
    for w in &am.drawn {
        let want: Vec<usize> = base.iter().chain(w).copied().collect();
        match absorb(&h, &am, &Matching::default(), w) {
            Ok(m) if covers_exactly(&h, &m, &want) => exact += 1,
            _ => failures.push(w.clone()),
        }
    }
    let mut pair_checks = 0;
    let mut pair_exact = 0;
    for ((w1, r1), (w2, r2)) in am.registry.iter().tuple_combinations() {
        if r1.block == r2.block || w1.iter().any(|v| w2.contains(v)) {
            continue;
        }
        pair_checks += 1;
        let w: Vec<usize> = w1.iter().chain(w2).copied().collect();
        let want: Vec<usize> = base.iter().chain(&w).copied().collect();
        match absorb(&h, &am, &Matching::default(), &w) {
            Ok(m) if covers_exactly(&h, &m, &want) => pair_exact += 1,
            // a lexicographic split may pair the sets differently; only outright wrong covers count
            Ok(_) => failures.push(w),
            Err(_) => {}
        }
        if pair_checks == 64 {
            break;
        }
    }
    for (i, w) in failures.iter().enumerate() {
        let body = serde_json::json!({ "hypergraph": to_hg(&h), "w": w, "base": base });
        write_artifact(
            opts,
            &format!("absorb-{}-{i}.json", p.seed),
            &body.to_string(),
        )?;
    }
    Ok(AbsorbSummary {
        params: p.clone(),
        min_degree: h.min_degree(1)?,
        blocks: am.blocks.len(),
        base_edges: am.base().len(),
        trials: am.stats.trials,
        registered: am.stats.registered,
        exact_covers: exact,
        pair_checks,
        pair_exact,
        violations: failures.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub n: usize,
    pub instances: u64,
    /// Orders of the below-threshold constructions.
    pub extremal_ns: Vec<usize>,
    /// Random instances also checked against the exact oracle.
    pub oracle_spot_checks: u64,
    pub seed: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            n: 32,
            instances: 100,
            extremal_ns: vec![8, 12, 16, 20],
            oracle_spot_checks: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalRow {
    pub n: usize,
    pub pipeline_found: bool,
    pub oracle_found: bool,
    pub path: PipelinePath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub params: PipelineParams,
    pub found: u64,
    pub validated: u64,
    pub fallback: u64,
    pub paths: BTreeMap<String, u64>,
    pub oracle_agreements: u64,
    pub extremal: Vec<ExtremalRow>,
    pub violations: u64,
}

impl PipelineSummary {
    pub fn fallback_rate(&self) -> f64 {
        if self.params.instances == 0 {
            0.0
        } else {
            self.fallback as f64 / self.params.instances as f64
        }
    }
}

pub fn pipeline(p: &PipelineParams, opts: &RunOptions) -> Result<PipelineSummary> {
    let target = threshold(p.n)?;
    let runs = par_map(
        opts,
        p.instances,
        |i| -> Result<(bool, bool, bool, PipelinePath, Option<bool>, Hypergraph)> {
            let seed = p.seed.wrapping_add(i);
            let h = random_dense_hypergraph(p.n, target, seed)?;
            let cfg = PipelineConfig {
                seed,
                ..PipelineConfig::default()
            };
            let (m, rep) = solve_pipeline(&h, &cfg)?;
            let valid = m.as_ref().is_some_and(|m| h.validate_matching(m).perfect);
            let oracle =
                (i < p.oracle_spot_checks).then(|| has_perfect_matching(&h).map(|o| o.is_some()));
            let oracle = oracle.transpose()?.map(|o| o == m.is_some());
            Ok((m.is_some(), valid, rep.fallback_used, rep.path, oracle, h))
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut out = PipelineSummary {
        params: p.clone(),
        found: 0,
        validated: 0,
        fallback: 0,
        paths: BTreeMap::new(),
        oracle_agreements: 0,
        extremal: Vec::new(),
        violations: 0,
    };
    for (i, (found, valid, fallback, path, oracle, h)) in runs.into_iter().enumerate() {
        out.found += u64::from(found);
        out.validated += u64::from(valid);
        out.fallback += u64::from(fallback);
        bump(
            &mut out.paths,
            serde_json::to_value(path).map_or(String::new(), |v| v.as_str().unwrap_or("").into()),
            1,
        );
        out.oracle_agreements += u64::from(oracle == Some(true));
        if !valid || oracle == Some(false) {
            out.violations += 1;
            write_artifact(opts, &format!("pipeline-{}-{i}.hg", p.seed), &to_hg(&h))?;
        }
    }
    for &n in &p.extremal_ns {
        let h = extremal_construction(n)?;
        let (m, rep) = solve_pipeline(&h, &PipelineConfig::default())?;
        let oracle = has_perfect_matching(&h)?.is_some();
        if m.is_some() || oracle {
            out.violations += 1;
        }
        out.extremal.push(ExtremalRow {
            n,
            pipeline_found: m.is_some(),
            oracle_found: oracle,
            path: rep.path,
        });
    }
    if 2 * out.fallback >= p.instances.max(1) {
        out.violations += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractParams {
    pub instances: u64,
    /// Planted class size, 1 or 2.
    pub l: usize,
    pub seed: u64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            instances: 1000,
            l: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractRow {
    pub recovered: u64,
    pub verified: u64,
    pub paths: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub params: ExtractParams,
    pub lemmas: BTreeMap<String, ExtractRow>,
    pub violations: u64,
}

/// Roles of a planted instance: the host sets and the planted block.
pub struct Planted {
    pub h: Hypergraph,
    pub sets: Vec<Vec<usize>>,
    pub block: Vec<Vec<usize>>,
}

/// Disjoint host sets of the given sizes, a complete block whose classes are
/// drawn from `pattern` (indices into the sets), and noise edges of the
/// lemma's type at a random rate.
pub fn planted_extraction(sizes: &[usize], pattern: &[usize], l: usize, rng: &mut Rng) -> Planted {
    let n: usize = sizes.iter().sum();
    let perm = index::sample(rng, n, n).into_vec();
    let mut sets = Vec::new();
    let mut at = 0;
    for &s in sizes {
        let mut set = perm[at..at + s].to_vec();
        set.sort_unstable();
        sets.push(set);
        at += s;
    }
    let mut taken: Vec<Vec<usize>> = vec![Vec::new(); sizes.len()];
    let block: Vec<Vec<usize>> = pattern
        .iter()
        .map(|&s| {
            let free: Vec<usize> = sets[s]
                .iter()
                .copied()
                .filter(|v| !taken[s].contains(v))
                .collect();
            let pick: Vec<usize> = index::sample(rng, free.len(), l)
                .into_iter()
                .map(|i| free[i])
                .sorted()
                .collect();
            taken[s].extend(&pick);
            pick
        })
        .collect();
    let rate: f64 = rng.gen_range(0.2..0.6);
    let mut edges: std::collections::BTreeSet<Vec<usize>> = block
        .iter()
        .map(|c| c.iter().copied())
        .multi_cartesian_product()
        .map(|e| e.into_iter().sorted().collect())
        .collect();
    let mut owner = vec![usize::MAX; n];
    for (i, set) in sets.iter().enumerate() {
        set.iter().for_each(|&v| owner[v] = i);
    }
    let want: Vec<usize> = pattern.iter().copied().sorted().collect();
    for e in (0..n).combinations(4) {
        let kind: Vec<usize> = e.iter().map(|&v| owner[v]).sorted().collect();
        if kind == want && rng.gen_bool(rate) {
            edges.insert(e);
        }
    }
    let h = Hypergraph::new(n, 4, edges).expect("valid planted edges");
    Planted { h, sets, block }
}

/// Sizes, role pattern and lemma name of each extraction campaign.
const LEMMAS: [(&str, &[usize], &[usize]); 4] = [
    ("one-three", &[5, 9], &[0, 1, 1, 1]),
    ("two-two", &[5, 5, 8], &[0, 1, 2, 2]),
    ("partite-volume", &[5, 5, 5, 5], &[0, 1, 2, 3]),
    ("complete-partite", &[16], &[0, 0, 0, 0]),
];

/// Witness check by listing every transversal against the edge list.
pub fn transversals_present(h: &Hypergraph, w: &MultipartiteWitness, l: usize) -> bool {
    let edges: std::collections::HashSet<Vec<usize>> = h.edges().map(<[usize]>::to_vec).collect();
    w.classes.len() == 4
        && w.classes.iter().all(|c| c.len() == l)
        && w.classes.iter().flatten().all_unique()
        && w.classes
            .iter()
            .map(|c| c.iter().copied())
            .multi_cartesian_product()
            .all(|mut e| {
                e.sort_unstable();
                edges.contains(&e)
            })
}

fn within(w: &MultipartiteWitness, sets: &[Vec<usize>], pattern: &[usize]) -> bool {
    w.classes
        .iter()
        .zip(pattern)
        .all(|(c, &s)| c.iter().all(|v| sets[s].contains(v)))
}

pub fn extract_campaign(p: &ExtractParams, opts: &RunOptions) -> Result<ExtractSummary> {
    let eta = num_rational::Ratio::new(1, 40);
    let budget = 1_000_000;
    let mut lemmas = BTreeMap::new();
    let mut violations = 0;
    for (name, sizes, pattern) in LEMMAS {
        let rows = par_map(
            opts,
            p.instances,
            |i| -> Result<(bool, bool, Option<String>)> {
                let mut rng = rng::indexed(p.seed, name, i);
                let pl = planted_extraction(sizes, pattern, p.l, &mut rng);
                let s = &pl.sets;
                let w = match name {
                    "one-three" => extract_one_three(&pl.h, &s[0], &s[1], eta, p.l, budget)?,
                    "two-two" => extract_two_two(&pl.h, &s[0], &s[1], &s[2], eta, p.l, budget)?,
                    "partite-volume" => {
                        extract_partite_volume(&pl.h, &s[0], &s[1], &s[2], &s[3], eta, p.l, budget)?
                    }
                    _ => find_complete_r_partite(&pl.h, p.l, budget),
                };
                Ok(match w {
                    Some(w) => {
                        let ok = transversals_present(&pl.h, &w, p.l) && within(&w, s, pattern);
                        let path = serde_json::to_value(w.path)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string));
                        (true, ok, path)
                    }
                    None => (false, false, None),
                })
            },
        )
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut row = ExtractRow::default();
        for (recovered, verified, path) in rows {
            row.recovered += u64::from(recovered);
            row.verified += u64::from(verified);
            if let Some(path) = path {
                bump(&mut row.paths, path, 1);
            }
        }
        violations += 2 * p.instances - row.recovered - row.verified;
        lemmas.insert(name.to_string(), row);
    }
    Ok(ExtractSummary {
        params: p.clone(),
        lemmas,
        violations,
    })
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> RunOptions {
        RunOptions::default()
    }

    #[test]
    fn stratum_sizes() {
        assert_eq!(moved_stratum(1).count(), 37 * 27);
        assert_eq!(superset_stratum(1).count(), 27);
        assert!(moved_stratum(1).all(|l| l.edge_count() == 37));
    }

    #[test]
    fn small_lemma_campaign_is_clean_and_deterministic() {
        let p = Lemma37Params {
            samples: 3000,
            mutants: 3000,
            strata_depth: 1,
            superset_depth: 1,
            seed: 5,
        };
        let a = lemma37(&p, &opts()).unwrap();
        assert_eq!(a.violations, 0);
        assert_eq!(a.sampled.checked, 3000);
        let b = lemma37(
            &p,
            &RunOptions {
                jobs: 1,
                artifacts: None,
            },
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn naive_oracle_on_known_graphs() {
        assert_eq!(naive_max_matching(&extremal_construction(12).unwrap()), 2);
        assert_eq!(naive_max_matching(&Hypergraph::complete(9, 4).unwrap()), 2);
        assert_eq!(naive_max_matching(&Hypergraph::empty(8, 4).unwrap()), 0);
    }

    #[test]
    fn small_solver_campaign_agrees() {
        let s = solver(
            &SolverParams {
                n_max: 10,
                trials: 200,
                seed: 1,
            },
            &opts(),
        )
        .unwrap();
        assert_eq!(s.agreements, 200);
    }

    #[test]
    fn tightness_rows() {
        let t = tightness(&[8, 12], &opts()).unwrap();
        assert_eq!(t.violations, 0);
        assert_eq!(t.rows[0].min_degree, 15);
    }

    #[test]
    fn planted_extraction_campaign() {
        let s = extract_campaign(
            &ExtractParams {
                instances: 20,
                l: 2,
                seed: 3,
            },
            &opts(),
        )
        .unwrap();
        assert_eq!(s.violations, 0, "{s:?}");
    }
}
