//! Pulling complete 4-partite blocks out of dense host sets.

use hypermatch::campaign::{planted_extraction, transversals_present};
use hypermatch::extract::{extract_one_three, extract_partite_volume, find_complete_r_partite};
use hypermatch::rng;
use num_rational::Ratio;

fn main() -> hypermatch::Result<()> {
    let eta = Ratio::new(1, 40);
    let mut rng = rng::substream(11, "extract-example");

    let p = planted_extraction(&[6, 10], &[0, 1, 1, 1], 2, &mut rng);
    let w =
        extract_one_three(&p.h, &p.sets[0], &p.sets[1], eta, 2, 1_000_000)?.expect("planted block");
    println!(
        "one-three      {:?} via {:?}, complete: {}",
        w.classes,
        w.path,
        transversals_present(&p.h, &w, 2)
    );

    let p = planted_extraction(&[5, 5, 5, 5], &[0, 1, 2, 3], 2, &mut rng);
    let s = &p.sets;
    let w = extract_partite_volume(&p.h, &s[0], &s[1], &s[2], &s[3], eta, 2, 1_000_000)?
        .expect("planted block");
    println!("partite-volume {:?} via {:?}", w.classes, w.path);
    println!("diagonal edges {:?}", w.diagonal_edges());

    let p = planted_extraction(&[16], &[0, 0, 0, 0], 2, &mut rng);
    let w = find_complete_r_partite(&p.h, 2, 1_000_000).expect("planted block");
    println!("K(2)           {:?}, planted {:?}", w.classes, p.block);
    Ok(())
}
