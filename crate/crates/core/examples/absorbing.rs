//! Building an absorbing matching and swallowing a leftover set with it.

use hypermatch::absorb::{absorb, build_absorbing_matching, AbsorbConfig};
use hypermatch::construct::random_dense_hypergraph;
use hypermatch::hypergraph::binomial;
use hypermatch::Matching;

fn main() -> hypermatch::Result<()> {
    let n = 40;
    let target = (binomial(39, 3) as u64 * 3).div_ceil(5);
    let h = random_dense_hypergraph(n, target, 2)?;
    let am = build_absorbing_matching(
        &h,
        &AbsorbConfig {
            seed: 2,
            ..AbsorbConfig::default()
        },
    )?;
    println!(
        "blocks: {}, base edges: {}, stats: {:?}",
        am.blocks.len(),
        am.base().len(),
        am.stats
    );

    let (w, _) = am
        .registry
        .iter()
        .next()
        .expect("at least one registered set");
    let m = absorb(&h, &am, &Matching::default(), w)?;
    println!(
        "absorbed {w:?}: {} edges, valid = {}",
        m.len(),
        h.validate_matching(&m).valid
    );
    Ok(())
}
