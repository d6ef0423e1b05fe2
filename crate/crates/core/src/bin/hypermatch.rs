//! Command-line front end: gen, solve, classify, verify, stats.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hypermatch::campaign::{self, RunOptions};
use hypermatch::construct::{threshold, Instance, InstanceRecipe, RecipeKind};
use hypermatch::format::{read_hg, to_hg};
use hypermatch::hypergraph::binomial;
use hypermatch::pipeline::{solve_pipeline, PipelineConfig};
use hypermatch::solve::max_matching_exact;
use hypermatch::{Error, Hypergraph, LinkGraph};

#[derive(Parser)]
#[command(
    name = "hypermatch",
    version,
    about = "Perfect matchings in 4-uniform hypergraphs"
)]
struct Cli {
    /// Root seed for every random choice.
    #[arg(long, global = true, env = "HYPERMATCH_SEED", default_value_t = 0)]
    seed: u64,
    /// Omit wall-clock fields so output is byte-reproducible.
    #[arg(long, global = true)]
    no_timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Extremal,
    Random,
    Planted,
    Hext,
    Pattern,
    Link,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Pipeline,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Campaign {
    Lemma37,
    Tightness,
    Solver,
    Absorb,
    Pipeline,
    Extract,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance plus a JSON manifest.
    Gen {
        kind: GenKind,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        min_deg: Option<u64>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long)]
        fill: Option<String>,
        #[arg(long)]
        fill_rate: Option<f64>,
        #[arg(long)]
        min_edges: Option<u32>,
        /// Output file; the manifest goes to `<out>.json`. Stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a perfect matching.
    Solve {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        /// Node budget of the exact search.
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
    },
    /// Classify a link graph given as 16 hex digits or a file holding them.
    Classify { mask: String },
    /// Run a verification campaign.
    Verify {
        campaign: Campaign,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        mutants: Option<u64>,
        #[arg(long)]
        strata_depth: Option<usize>,
        #[arg(long)]
        superset_depth: Option<usize>,
        /// Comma-separated orders.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        instances: Option<u64>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Directory for counterexample artifacts.
        #[arg(long, default_value = "artifacts")]
        artifacts: PathBuf,
        /// Also write the summary here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Degrees, density and the threshold comparison.
    Stats { input: PathBuf },
}

struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

fn emit(mut v: Value, started: Instant, timings: bool) -> Value {
    if timings {
        v["elapsed_ms"] = json!(started.elapsed().as_millis() as u64);
    }
    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    v
}

fn io(e: std::io::Error) -> Failure {
    Failure(e.to_string())
}

fn gen(
    cli: &Cli,
    kind: GenKind,
    n: usize,
    params: Vec<(&str, Option<String>)>,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let rk = match kind {
        GenKind::Extremal => RecipeKind::Extremal,
        GenKind::Random => RecipeKind::RandomDense,
        GenKind::Planted => RecipeKind::PlantedPm,
        GenKind::Hext => RecipeKind::Hext,
        GenKind::Pattern => RecipeKind::Pattern,
        GenKind::Link => RecipeKind::Link,
    };
    let mut recipe = InstanceRecipe::new(rk, n, cli.seed);
    for (k, v) in params {
        if let Some(v) = v {
            recipe = recipe.with(k, v);
        }
    }
    let (body, mut manifest) = match recipe.build()? {
        Instance::Hypergraph(h) => (to_hg(&h), describe(&h)?),
        Instance::Planted(h, m) => {
            let mut d = describe(&h)?;
            d["planted"] = json!(m);
            (to_hg(&h), d)
        }
        Instance::Link(l) => (
            format!("{l}\n"),
            json!({ "mask": l, "edges": l.edge_count() }),
        ),
    };
    manifest["recipe"] = json!(recipe);
    match out {
        Some(path) => {
            std::fs::write(path, &body).map_err(io)?;
            let mut m = path.as_os_str().to_owned();
            m.push(".json");
            let text = serde_json::to_string_pretty(&manifest).expect("json") + "\n";
            std::fs::write(PathBuf::from(m), text).map_err(io)?;
        }
        None => print!("{body}"),
    }
    Ok(0)
}

fn describe(h: &Hypergraph) -> Result<Value, Failure> {
    Ok(json!({
        "n": h.n(),
        "r": h.r(),
        "edges": h.edge_count(),
        "min_degree": if h.n() > 0 { Some(h.min_degree(1)?) } else { None },
    }))
}

fn solve(cli: &Cli, input: &Path, mode: Mode, budget: u64) -> Result<u8, Failure> {
    let started = Instant::now();
    let h = read_hg(input)?;
    let mode = match mode {
        Mode::Auto if h.n() <= 24 => Mode::Exact,
        Mode::Auto => Mode::Pipeline,
        m => m,
    };
    let out = match mode {
        Mode::Pipeline => {
            let cfg = PipelineConfig {
                seed: cli.seed,
                fallback_budget: budget,
                ..PipelineConfig::default()
            };
            let (m, report) = solve_pipeline(&h, &cfg)?;
            json!({
                "mode": "pipeline",
                "n": h.n(),
                "found": m.is_some(),
                "path": report.path,
                "matching": m,
                "report": report,
            })
        }
        _ => {
            let res = max_matching_exact(&h, budget)?;
            let perfect = h.validate_matching(&res.matching).perfect;
            json!({
                "mode": "exact",
                "n": h.n(),
                "found": perfect,
                "path": "exact",
                "max_matching": res.matching.len(),
                "optimal": res.optimal,
                "nodes_explored": res.nodes_explored,
                "matching": res.matching,
            })
        }
    };
    let v = emit(out, started, !cli.no_timings);
    Ok(if v["found"] == json!(true) { 0 } else { 1 })
}

fn classify(cli: &Cli, arg: &str) -> Result<u8, Failure> {
    let started = Instant::now();
    let text = match arg.parse::<LinkGraph>() {
        Ok(_) => arg.to_string(),
        Err(_) if Path::new(arg).exists() => std::fs::read_to_string(arg).map_err(io)?,
        Err(e) => return Err(e.into()),
    };
    let l: LinkGraph = text.trim().parse()?;
    let base = json!({ "mask": l, "edges": l.edge_count(), "canonical": l.canonical_form() });
    let (v, code) = match l.classify() {
        Ok(c) => {
            let mut v = base;
            v["verdict"] = json!(c.verdict);
            v["witness"] = json!(c.witness);
            v["witness_verified"] = json!(c.verify(l));
            (v, 0)
        }
        Err(Error::NotApplicable { .. }) => {
            let mut v = base;
            v["verdict"] = json!("NotApplicable");
            (v, 1)
        }
        Err(e) => {
            std::fs::create_dir_all("artifacts").map_err(io)?;
            std::fs::write(format!("artifacts/lemma37-{l}.hex"), format!("{l}\n")).map_err(io)?;
            let mut v = base;
            v["verdict"] = json!("LemmaViolation");
            v["error"] = json!(e.to_string());
            (v, 1)
        }
    };
    emit(v, started, !cli.no_timings);
    Ok(code)
}

fn verify(cli: &Cli, cmd: &Cmd) -> Result<u8, Failure> {
    let Cmd::Verify {
        campaign,
        samples,
        mutants,
        strata_depth,
        superset_depth,
        n,
        n_max,
        trials,
        instances,
        l,
        jobs,
        artifacts,
        out,
    } = cmd
    else {
        unreachable!()
    };
    let started = Instant::now();
    let opts = RunOptions {
        jobs: *jobs,
        artifacts: Some(artifacts.clone()),
    };
    let seed = cli.seed;
    let (summary, violations) = match campaign {
        Campaign::Lemma37 => {
            let d = campaign::Lemma37Params::default();
            let p = campaign::Lemma37Params {
                samples: samples.unwrap_or(d.samples),
                mutants: mutants.unwrap_or(d.mutants),
                strata_depth: strata_depth.unwrap_or(d.strata_depth),
                superset_depth: superset_depth.unwrap_or(d.superset_depth),
                seed,
            };
            let s = campaign::lemma37(&p, &opts)?;
            (json!(s), s.violations)
        }
        Campaign::Tightness => {
            let ns = if n.is_empty() {
                vec![8, 12, 16, 20]
            } else {
                n.clone()
            };
            let s = campaign::tightness(&ns, &opts)?;
            (json!(s), s.violations)
        }
        Campaign::Solver => {
            let d = campaign::SolverParams::default();
            let p = campaign::SolverParams {
                n_max: n_max.unwrap_or(d.n_max),
                trials: trials.unwrap_or(d.trials),
                seed,
            };
            let s = campaign::solver(&p, &opts)?;
            (json!(s), s.violations)
        }
        Campaign::Absorb => {
            let d = campaign::AbsorbParams::default();
            let p = campaign::AbsorbParams {
                n: n.first().copied().unwrap_or(d.n),
                samples: samples.map_or(d.samples, |s| s as usize),
                seed,
                ..d
            };
            let s = campaign::absorb_campaign(&p, &opts)?;
            (json!(s), s.violations)
        }
        Campaign::Pipeline => {
            let d = campaign::PipelineParams::default();
            let p = campaign::PipelineParams {
                n: n.first().copied().unwrap_or(d.n),
                instances: instances.unwrap_or(d.instances),
                seed,
                ..d
            };
            let s = campaign::pipeline(&p, &opts)?;
            (json!(s), s.violations)
        }
        Campaign::Extract => {
            let d = campaign::ExtractParams::default();
            let p = campaign::ExtractParams {
                instances: instances.unwrap_or(d.instances),
                l: l.unwrap_or(d.l),
                seed,
            };
            let s = campaign::extract_campaign(&p, &opts)?;
            (json!(s), s.violations)
        }
    };
    if let Some(path) = out {
        campaign::write_json(path, &summary)?;
    }
    emit(summary, started, !cli.no_timings);
    Ok(u8::from(violations > 0))
}

fn stats(cli: &Cli, input: &Path) -> Result<u8, Failure> {
    let started = Instant::now();
    let h = read_hg(input)?;
    let degrees: Vec<u64> = (1..h.r())
        .filter(|&d| d <= h.n())
        .map(|d| h.min_degree(d))
        .collect::<Result<_, _>>()?;
    let all: Vec<usize> = (0..h.n()).collect();
    let density = h.density(&all).ok().map(|d| d.to_string());
    let thr = (h.r() == 4).then(|| threshold(h.n()).ok()).flatten();
    let flag = match (thr, degrees.first()) {
        (Some(t), Some(&d)) if d < t => Some("below threshold"),
        (Some(t), Some(&d)) if d == t => Some("at threshold"),
        (Some(_), Some(_)) => Some("above threshold"),
        _ => None,
    };
    let v = json!({
        "n": h.n(),
        "r": h.r(),
        "edges": h.edge_count(),
        "max_edges": binomial(h.n() as u64, h.r() as u64).to_string(),
        "min_degrees": degrees,
        "density": density,
        "threshold": thr,
        "flag": flag,
    });
    emit(v, started, !cli.no_timings);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Gen {
            kind,
            n,
            min_deg,
            noise,
            pattern,
            fill,
            fill_rate,
            min_edges,
            out,
        } => {
            let params = vec![
                ("min_deg", min_deg.map(|v| v.to_string())),
                ("noise", noise.map(|v| v.to_string())),
                ("pattern", pattern.clone()),
                ("fill", fill.clone()),
                ("fill_rate", fill_rate.map(|v| v.to_string())),
                ("min_edges", min_edges.map(|v| v.to_string())),
            ];
            gen(&cli, *kind, *n, params, out.as_deref())
        }
        Cmd::Solve {
            input,
            mode,
            budget,
        } => solve(&cli, input, *mode, *budget),
        Cmd::Classify { mask } => classify(&cli, mask),
        cmd @ Cmd::Verify { .. } => verify(&cli, cmd),
        Cmd::Stats { input } => stats(&cli, input),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
