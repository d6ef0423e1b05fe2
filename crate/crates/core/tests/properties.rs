use std::collections::BTreeSet;

use hypermatch::construct::{pattern_witness, random_link_graph, Fill};
use hypermatch::format::{parse_hg, to_hg};
use hypermatch::hypergraph::{binomial, CountRoute};
use hypermatch::link::GroupElement;
use hypermatch::pipeline::detect_extremal;
use hypermatch::{rng, DensityKind, Hypergraph, LinkGraph, PatternKind, Verdict};
use itertools::Itertools;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;

fn hypergraph(max_n: usize) -> impl Strategy<Value = Hypergraph> {
    (4..=max_n, 0.0..0.7f64, any::<u64>()).prop_map(|(n, rate, seed)| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<Vec<usize>> = (0..n)
            .combinations(4)
            .filter(|_| rand::Rng::gen_bool(&mut rng, rate))
            .collect();
        Hypergraph::new(n, 4, edges).unwrap()
    })
}

fn subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0..n, 4..=n).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn handshake(h in hypergraph(12)) {
        let total: usize = (0..h.n()).map(|v| h.vertex_degree(v)).sum();
        prop_assert_eq!(total, 4 * h.edge_count());
        let singles: u64 = (0..h.n()).map(|v| h.degree(&[v]).unwrap()).sum();
        prop_assert_eq!(singles, 4 * h.edge_count() as u64);
    }

    #[test]
    fn degree_never_exceeds_binomial(h in hypergraph(11), d in 1usize..4) {
        for set in (0..h.n()).combinations(d).take(40) {
            let deg = h.degree(&set).unwrap();
            prop_assert!(u128::from(deg) <= binomial((h.n() - d) as u64, (4 - d) as u64));
        }
        let min = h.min_degree(d).unwrap();
        prop_assert!((0..h.n()).combinations(d).all(|s| h.degree(&s).unwrap() >= min));
    }

    #[test]
    fn induce_matches_density((h, u) in hypergraph(12).prop_flat_map(|h| { let n = h.n(); (Just(h), subset(n)) })) {
        let sub = h.induce(&u);
        let all: Vec<usize> = (0..u.len()).collect();
        prop_assert_eq!(sub.density(&all).unwrap(), h.density(&u).unwrap());
        let inside = h.edges().filter(|e| e.iter().all(|v| u.contains(v))).count() as u64;
        prop_assert_eq!(Ratio::new(inside, binomial(u.len() as u64, 4) as u64), h.density(&u).unwrap());
    }

    #[test]
    fn hg_round_trip(h in hypergraph(13)) {
        prop_assert_eq!(parse_hg(&to_hg(&h)).unwrap(), h);
    }

    #[test]
    fn count_routes_agree(h in hypergraph(12), cut in 1usize..3) {
        let n = h.n();
        let a: Vec<usize> = (0..cut.min(n)).collect();
        let b: Vec<usize> = (cut.min(n)..n).collect();
        prop_assume!(b.len() >= 3);
        let scan = h.count_typed_edges(&[&a, &b], &[1, 3], CountRoute::Scan).unwrap();
        let enumerate = h.count_typed_edges(&[&a, &b], &[1, 3], CountRoute::Enumerate).unwrap();
        let brute = h.edges().filter(|e| e.iter().filter(|v| a.contains(v)).count() == 1).count() as u64;
        prop_assert_eq!(scan, brute);
        prop_assert_eq!(enumerate, brute);
        let d = h.partite_density(DensityKind::OneVsRest, &[&a, &b]).unwrap();
        prop_assert_eq!(d, Ratio::new(brute, a.len() as u64 * binomial(b.len() as u64, 3) as u64));
    }

    #[test]
    fn canonical_form_is_orbit_invariant(mask in any::<u64>(), seed in any::<u64>()) {
        let l = LinkGraph(mask);
        let mut r = rng::substream(seed, "prop");
        let g = GroupElement::random(&mut r);
        let moved = l.apply(&g);
        prop_assert_eq!(moved.edge_count(), l.edge_count());
        prop_assert_eq!(moved.canonical_form(), l.canonical_form());
        prop_assert!(l.canonical_form().0 <= mask);
    }

    #[test]
    fn classification_is_total_and_verified(seed in any::<u64>()) {
        let mut r = rng::substream(seed, "prop-classify");
        let l = random_link_graph(37, &mut r);
        let c = l.classify().unwrap();
        prop_assert!(c.verify(l));
        if l.is_ext().is_some() {
            prop_assert!(l.perfect_matching().is_none());
        }
    }

    #[test]
    fn detectors_are_monotone(kind_ix in 0usize..3, seed in any::<u64>(), extra in 0u32..64) {
        let kind = PatternKind::ALL[kind_ix];
        let l = pattern_witness(kind, Fill::Random(0.3), seed);
        let ps = l.detect_pattern(kind).unwrap();
        prop_assert!(ps.verify(l, kind));
        let more = LinkGraph(l.0 | 1 << extra);
        prop_assert!(more.detect_pattern(kind).is_some());
    }

    #[test]
    fn detected_extremal_sets_satisfy_both_conditions(h in hypergraph(16)) {
        let alpha = Ratio::new(1, 10);
        if let Some(b) = detect_extremal(&h, alpha, 16) {
            prop_assert!(h.density(&b).unwrap() < alpha);
            prop_assert!(Ratio::from_integer(b.len() as u64) >= (Ratio::new(3, 4) - alpha) * Ratio::from_integer(h.n() as u64));
            prop_assert_eq!(b.iter().collect::<BTreeSet<_>>().len(), b.len());
        }
    }
}

#[test]
fn ext_and_pm_are_exclusive_over_every_one_bit_superset() {
    let hext = hypermatch::construct::h_ext_canonical();
    for b in (0..64).filter(|b| hext.0 >> b & 1 == 0) {
        let l = LinkGraph(hext.0 | 1 << b);
        let c = l.classify().unwrap();
        assert_ne!(c.verdict, Verdict::Ext);
        assert!(c.verify(l));
    }
}
