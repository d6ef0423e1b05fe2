use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypermatch"))
        .args(args)
        .current_dir(dir)
        .env_remove("HYPERMATCH_SEED")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_then_stats_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(d, &["gen", "extremal", "--n", "8", "--out", "e8.hg"])
        .status
        .success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("e8.hg.json")).unwrap()).unwrap();
    assert_eq!(manifest["edges"], 35);

    let stats = run(d, &["stats", "e8.hg", "--no-timings"]);
    let v = json(&stats);
    assert_eq!(v["min_degrees"][0], 15);
    assert_eq!(v["threshold"], 16);
    assert_eq!(v["flag"], "below threshold");

    let solve = run(d, &["solve", "e8.hg", "--mode", "exact", "--no-timings"]);
    assert_eq!(solve.status.code(), Some(1));
    assert_eq!(json(&solve)["max_matching"], 1);

    assert!(run(d, &["gen", "extremal", "--n", "16", "--out", "e16.hg"])
        .status
        .success());
    let v = json(&run(d, &["stats", "e16.hg", "--no-timings"]));
    assert_eq!(v["edges"], 1105);
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("k8.hg"),
        hypermatch::format::to_hg(&hypermatch::Hypergraph::complete(8, 4).unwrap()),
    )
    .unwrap();
    assert_eq!(
        run(d, &["solve", "k8.hg", "--no-timings"]).status.code(),
        Some(0)
    );
    assert_eq!(
        json(&run(d, &["stats", "k8.hg", "--no-timings"]))["flag"],
        "above threshold"
    );

    run(
        d,
        &[
            "gen", "planted", "--n", "24", "--noise", "0.1", "--out", "p.hg",
        ],
    );
    let out = run(d, &["solve", "p.hg", "--mode", "pipeline", "--no-timings"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["found"], true);

    std::fs::write(d.join("bad.hg"), "4 8 1\n0 1 2\n").unwrap();
    assert_eq!(run(d, &["solve", "bad.hg"]).status.code(), Some(2));
    assert_eq!(
        run(d, &["gen", "extremal", "--n", "10"]).status.code(),
        Some(2)
    );
}

#[test]
fn classify_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let hext = String::from_utf8(run(d, &["gen", "hext"]).stdout).unwrap();
    assert_eq!(hext.trim().len(), 16);
    let v = json(&run(d, &["classify", hext.trim(), "--no-timings"]));
    assert_eq!(v["verdict"], "Ext");
    assert_eq!(v["witness"]["Cover"], serde_json::json!([0, 0, 0]));
    assert_eq!(v["edges"], 37);
    let full = run(d, &["classify", "ffffffffffffffff", "--no-timings"]);
    assert_eq!(json(&full)["verdict"], "PerfectMatching");
    let sparse = run(d, &["classify", "0000000fffffffff", "--no-timings"]);
    assert_eq!(sparse.status.code(), Some(1));
    assert_eq!(json(&sparse)["verdict"], "NotApplicable");
    assert_eq!(run(d, &["classify", "xyz"]).status.code(), Some(2));
}

#[test]
fn gen_random_meets_the_degree_target() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(
        d,
        &[
            "gen",
            "random",
            "--n",
            "12",
            "--min-deg",
            "82",
            "--seed",
            "7",
            "--out",
            "r.hg",
        ],
    );
    let v = json(&run(d, &["stats", "r.hg", "--no-timings"]));
    assert!(v["min_degrees"][0].as_u64().unwrap() >= 82);
}

#[test]
fn verify_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "verify",
        "lemma37",
        "--samples",
        "2000",
        "--mutants",
        "2000",
        "--strata-depth",
        "1",
        "--superset-depth",
        "1",
        "--no-timings",
        "--seed",
        "4",
    ];
    let a = run(d, &args);
    let b = run(d, &[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let t = run(d, &["verify", "tightness", "--n", "8,12", "--no-timings"]);
    assert_eq!(t.status.code(), Some(0));
    assert_eq!(json(&t)["violations"], 0);
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let with_env = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_hypermatch"))
            .args(["gen", "link"])
            .current_dir(d)
            .env("HYPERMATCH_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(
        with_env("5"),
        run(d, &["gen", "link", "--seed", "5"]).stdout
    );
    assert_ne!(with_env("5"), with_env("6"));
}
