//! The full matcher on a dense random instance and on an extremal one.

use hypermatch::construct::{
    extremal_construction, extremal_parts, random_dense_hypergraph, threshold,
};
use hypermatch::pipeline::{solve_pipeline, PipelineConfig};
use hypermatch::Hypergraph;

fn main() -> hypermatch::Result<()> {
    let cfg = PipelineConfig::default();

    let n = 32;
    let h = random_dense_hypergraph(n, threshold(n)?, 4)?;
    let (m, report) = solve_pipeline(&h, &cfg)?;
    println!("dense n={n}: found={} path={:?}", m.is_some(), report.path);
    for s in &report.stages {
        println!("  {:<20} {:>3}  {}", s.name, s.vertices, s.note);
    }

    // one extra edge inside B lifts the construction to the threshold on that edge
    let n = 16;
    let x = extremal_construction(n)?;
    let (_, b) = extremal_parts(n)?;
    let mut edges: Vec<Vec<usize>> = x.edges().map(<[usize]>::to_vec).collect();
    edges.extend(
        b.chunks(4)
            .map(|c| c.iter().chain(&b).copied().take(4).collect::<Vec<_>>()),
    );
    edges.sort();
    edges.dedup();
    let repaired = Hypergraph::new(n, 4, edges)?;
    let (m, report) = solve_pipeline(&repaired, &cfg)?;
    println!(
        "repaired n={n}: found={} path={:?}",
        m.is_some(),
        report.path
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&report.extremal).expect("json")
    );

    let (m, report) = solve_pipeline(&x, &cfg)?;
    println!(
        "construction n={n}: found={} fallback={:?}",
        m.is_some(),
        report.fallback_outcome
    );
    Ok(())
}
