//! Writing, reading and summarising `.hg` files.

use hypermatch::construct::{planted_pm_instance, threshold};
use hypermatch::format::{parse_hg, to_hg};

fn main() -> hypermatch::Result<()> {
    let (h, planted) = planted_pm_instance(12, 0.2, 9)?;
    let text = to_hg(&h);
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("...");
    let back = parse_hg(&text)?;
    assert_eq!(back, h);
    let all: Vec<usize> = (0..h.n()).collect();
    println!(
        "n={} edges={} density={}",
        h.n(),
        h.edge_count(),
        h.density(&all)?
    );
    for d in 1..4 {
        println!("delta_{d} = {}", h.min_degree(d)?);
    }
    println!("threshold({}) = {}", h.n(), threshold(h.n())?);
    println!(
        "planted matching valid: {:?}",
        h.validate_matching(&planted)
    );
    Ok(())
}
