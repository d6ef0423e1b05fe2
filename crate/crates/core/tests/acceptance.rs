use std::process::ExitCode;
use std::time::{Duration, Instant};

use hypermatch::campaign::{
    absorb_campaign, extract_campaign, lemma37, pipeline, solver, tightness, AbsorbParams,
    ExtractParams, Lemma37Params, PipelineParams, RunOptions, SolverParams,
};
use hypermatch::construct::{h_ext_canonical, threshold};
use hypermatch::link::{bit, Verdict};
use hypermatch::LinkGraph;
use num_bigint::BigUint;
use serde::Serialize;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, n: usize, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {n}: {detail}");
        if !ok {
            self.failed += 1;
        }
    }
}

fn big_binomial(n: u64, k: u64) -> BigUint {
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

// all 4! * 4! ways to line up the second and third classes against the first
fn brute_tripartite_pm(l: LinkGraph) -> bool {
    let perms: Vec<[usize; 4]> = {
        let mut out = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        if (0..4).all(|i| (0..i).all(|j| p[i] != p[j])) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    };
    perms.iter().any(|p| {
        perms
            .iter()
            .any(|q| (0..4).all(|i| l.0 >> bit(i, p[i], q[i]) & 1 == 1))
    })
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn main() -> ExitCode {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let opts = RunOptions {
        jobs,
        artifacts: None,
    };
    let mut report = Report { failed: 0 };

    // 1
    let (ok, dt) = timed(|| {
        [8u64, 12, 16, 20, 40].iter().all(|&n| {
            let expect = big_binomial(n - 1, 3) - big_binomial(3 * n / 4, 3) + 1u32;
            BigUint::from(threshold(n as usize).unwrap()) == expect
        })
    });
    report.check(
        1,
        ok && dt < Duration::from_secs(1),
        format!("threshold exact for n in 8..=40, {dt:.2?}"),
    );

    // 2
    let (tight, dt) = timed(|| tightness(&[8, 12, 16, 20], &opts).unwrap());
    let ok = tight.violations == 0
        && tight.rows.iter().all(|r| {
            r.optimal
                && r.max_matching == r.n / 4 - 1
                && r.min_degree + 1 == threshold(r.n).unwrap()
        });
    report.check(
        2,
        ok && dt < Duration::from_secs(60),
        format!("{} rows tight, {dt:.2?}", tight.rows.len()),
    );

    // 3
    let lp = Lemma37Params {
        samples: 1_000_000,
        mutants: 100_000,
        ..Lemma37Params::default()
    };
    let (lemma, dt) = timed(|| lemma37(&lp, &opts).unwrap());
    let tallies = std::iter::once(&lemma.sampled)
        .chain(std::iter::once(&lemma.mutated))
        .chain(lemma.strata.iter().map(|s| &s.tally));
    let witness_failures: u64 = tallies.clone().map(|t| t.witness_failures).sum();
    let checked: u64 = tallies.map(|t| t.checked).sum();
    let ok = lemma.violations == 0
        && witness_failures == 0
        && lemma.sampled.checked >= 1_000_000
        && lemma.mutated.checked + lemma.mutated.not_applicable >= 100_000
        && dt < Duration::from_secs(600);
    report.check(
        3,
        ok,
        format!("{checked} link graphs classified, {} violations, {witness_failures} witness failures, {dt:.2?}", lemma.violations),
    );

    // 4
    let (ok4, dt) = timed(|| {
        let h = h_ext_canonical();
        let mut ok = h.edge_count() == 37 && h.is_ext().is_some() && !brute_tripartite_pm(h);
        ok &= h
            .classify()
            .map(|c| c.verdict == Verdict::Ext && c.verify(h))
            .unwrap_or(false);
        let mut supersets = 0;
        for b in 0..64 {
            if h.0 >> b & 1 == 1 {
                continue;
            }
            supersets += 1;
            let s = LinkGraph(h.0 | 1 << b);
            ok &= s.is_ext().is_none();
            ok &= s
                .classify()
                .map(|c| c.verdict != Verdict::Ext && c.verify(s))
                .unwrap_or(false);
        }
        ok && supersets == 27
    });
    report.check(
        4,
        ok4 && dt < Duration::from_secs(1),
        format!("37 edges, no matching, 27 supersets non-Ext, {dt:.2?}"),
    );

    // 5
    let sp = SolverParams {
        n_max: 12,
        trials: 10_000,
        ..SolverParams::default()
    };
    let (sol, dt) = timed(|| solver(&sp, &opts).unwrap());
    let ok = sol.violations == 0 && sol.agreements == 10_000 && dt < Duration::from_secs(300);
    report.check(5, ok, format!("{}/10000 agree, {dt:.2?}", sol.agreements));

    // 6
    let (ext, dt) = timed(|| {
        [1, 2].map(|l| {
            extract_campaign(
                &ExtractParams {
                    instances: 1000,
                    l,
                    ..ExtractParams::default()
                },
                &opts,
            )
            .unwrap()
        })
    });
    let ok = ext.iter().all(|s| {
        s.violations == 0
            && s.lemmas.len() == 4
            && s.lemmas
                .values()
                .all(|r| r.recovered == 1000 && r.verified == 1000)
    }) && dt < Duration::from_secs(300);
    report.check(
        6,
        ok,
        format!("4 lemmas x 1000 instances at l = 1, 2, {dt:.2?}"),
    );

    // 7
    let ap = AbsorbParams::default();
    let (abs, dt) = timed(|| absorb_campaign(&ap, &opts).unwrap());
    let ok = abs.trials == 200
        && abs.registered * 100 >= 99 * abs.trials
        && abs.exact_covers == abs.registered
        && abs.pair_exact == abs.pair_checks
        && abs.violations == 0
        && dt < Duration::from_secs(600);
    report.check(
        7,
        ok,
        format!(
            "{}/{} registered, {} exact covers, {dt:.2?}",
            abs.registered, abs.trials, abs.exact_covers
        ),
    );

    // 8
    let pp = PipelineParams {
        extremal_ns: vec![8, 12, 16, 20],
        ..PipelineParams::default()
    };
    let (pipe, dt) = timed(|| pipeline(&pp, &opts).unwrap());
    let ok = pipe.validated == 100
        && pipe.fallback * 2 < pipe.params.instances
        && pipe.extremal.len() == 4
        && pipe
            .extremal
            .iter()
            .all(|r| !r.pipeline_found && !r.oracle_found)
        && pipe.violations == 0
        && dt < Duration::from_secs(1800);
    report.check(
        8,
        ok,
        format!(
            "{}/100 validated, {} via fallback, {dt:.2?}",
            pipe.validated, pipe.fallback
        ),
    );

    // 9
    let single = RunOptions {
        jobs: 1,
        artifacts: None,
    };
    let again = [
        json(&tight) == json(&tightness(&[8, 12, 16, 20], &single).unwrap()),
        json(&lemma) == json(&lemma37(&lp, &single).unwrap()),
        json(&sol) == json(&solver(&sp, &single).unwrap()),
        json(&ext)
            == json(&[1, 2].map(|l| {
                extract_campaign(
                    &ExtractParams {
                        instances: 1000,
                        l,
                        ..ExtractParams::default()
                    },
                    &single,
                )
                .unwrap()
            })),
        json(&abs) == json(&absorb_campaign(&ap, &single).unwrap()),
        json(&pipe) == json(&pipeline(&pp, &single).unwrap()),
    ];
    let same = again.iter().filter(|&&b| b).count();
    report.check(
        9,
        same == again.len(),
        format!(
            "{same}/{} campaigns byte-identical on rerun with 1 thread",
            again.len()
        ),
    );

    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
