//! The degree threshold and the construction that shows it is tight.
//!
//! Run with `cargo run --release --example threshold_tightness`.

use hypermatch::construct::{extremal_construction, threshold};
use hypermatch::solve::max_matching_exact;

fn main() -> hypermatch::Result<()> {
    println!(
        "{:>4} {:>10} {:>8} {:>7} {:>12}",
        "n", "threshold", "delta_1", "edges", "max matching"
    );
    for n in [8, 12, 16, 20] {
        let h = extremal_construction(n)?;
        let best = max_matching_exact(&h, u64::MAX)?;
        assert!(best.optimal);
        println!(
            "{n:>4} {:>10} {:>8} {:>7} {:>12}",
            threshold(n)?,
            h.min_degree(1)?,
            h.edge_count(),
            best.matching.len()
        );
    }
    Ok(())
}
