//! Classifying 4x4x4 link graphs, including the exceptional `H_ext`.

use hypermatch::construct::{h_ext_canonical, pattern_witness, random_link_graph, Fill};
use hypermatch::rng;
use hypermatch::{LinkGraph, PatternKind};

fn show(label: &str, l: LinkGraph) {
    match l.classify() {
        Ok(c) => println!(
            "{label:<14} {l} edges={:<2} {:?} {:?}",
            l.edge_count(),
            c.verdict,
            c.witness
        ),
        Err(e) => println!("{label:<14} {l} edges={:<2} {e}", l.edge_count()),
    }
}

fn main() {
    let hext = h_ext_canonical();
    show("h_ext", hext);
    println!("{:<14} {}", "canonical", hext.canonical_form());
    for kind in PatternKind::ALL {
        let l = pattern_witness(kind, Fill::Zero, 1);
        println!(
            "{:<14} {l} {:?}",
            format!("{kind:?} seed"),
            l.detect_pattern(kind)
        );
    }
    let mut rng = rng::substream(7, "example");
    for i in 0..3 {
        show(&format!("random #{i}"), random_link_graph(37, &mut rng));
    }
    show("sparse", LinkGraph(0xffff_ffff));
}
