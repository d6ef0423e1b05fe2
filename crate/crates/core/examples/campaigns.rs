//! Small runs of the verification campaigns; the CLI `verify` runs them at scale.

use hypermatch::campaign::{self, RunOptions};

fn main() -> hypermatch::Result<()> {
    let opts = RunOptions::default();
    let lemma = campaign::lemma37(
        &campaign::Lemma37Params {
            samples: 20_000,
            mutants: 20_000,
            strata_depth: 1,
            superset_depth: 1,
            seed: 1,
        },
        &opts,
    )?;
    println!("lemma37: {}", serde_json::to_string(&lemma).expect("json"));
    let solver = campaign::solver(
        &campaign::SolverParams {
            n_max: 12,
            trials: 500,
            seed: 1,
        },
        &opts,
    )?;
    println!(
        "solver: {}/{} agree",
        solver.agreements, solver.params.trials
    );
    let tight = campaign::tightness(&[8, 12, 16, 20], &opts)?;
    println!(
        "tightness: {}",
        serde_json::to_string(&tight.rows).expect("json")
    );
    Ok(())
}
