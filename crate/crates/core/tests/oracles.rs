use hypermatch::construct::{extremal_construction, random_link_graph, threshold};
use hypermatch::link::Triple;
use hypermatch::solve::{
    greedy_matching, hall_matching, has_perfect_matching, max_matching_exact, tripartite_pm_444,
    HallOutcome,
};
use hypermatch::{rng, Hypergraph, LinkGraph};
use itertools::Itertools;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn big_binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::from(1u32), |acc, i| {
        acc * BigUint::from(n - i) / BigUint::from(i + 1)
    })
}

#[test]
fn threshold_against_big_integers() {
    for n in [8u64, 12, 16, 20, 40, 400] {
        let want = big_binomial(n - 1, 3) - big_binomial(3 * n / 4, 3) + BigUint::from(1u32);
        assert_eq!(
            BigUint::from(threshold(n as usize).unwrap()),
            want,
            "n = {n}"
        );
    }
}

#[test]
fn construction_edge_counts_by_enumeration() {
    for n in [8usize, 12, 16, 20] {
        let a = n / 4 - 1;
        let brute = (0..n)
            .combinations(4)
            .filter(|e| e.iter().any(|&v| v < a))
            .count();
        assert_eq!(extremal_construction(n).unwrap().edge_count(), brute);
    }
    assert_eq!(extremal_construction(16).unwrap().edge_count(), 1105);
}

/// Largest matching by trying every subset of edges, smallest n only.
fn subset_max_matching(h: &Hypergraph) -> usize {
    let edges: Vec<u32> = h
        .edges()
        .map(|e| e.iter().fold(0u32, |m, &v| m | 1 << v))
        .collect();
    fn go(edges: &[u32], used: u32) -> usize {
        match edges.split_first() {
            None => 0,
            Some((&e, rest)) => {
                let skip = go(rest, used);
                if e & used == 0 {
                    skip.max(1 + go(rest, used | e))
                } else {
                    skip
                }
            }
        }
    }
    go(&edges, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_solver_matches_subset_enumeration(n in 4usize..=9, rate in 0.0..0.25f64, seed in any::<u64>()) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<Vec<usize>> = (0..n).combinations(4).filter(|_| r.gen_bool(rate)).collect();
        let h = Hypergraph::new(n, 4, edges).unwrap();
        let res = max_matching_exact(&h, u64::MAX).unwrap();
        prop_assert!(res.optimal);
        prop_assert!(h.validate_matching(&res.matching).valid);
        prop_assert_eq!(res.matching.len(), subset_max_matching(&h));
        prop_assert!(greedy_matching(&h).len() <= res.matching.len());
        if n % 4 == 0 {
            prop_assert_eq!(has_perfect_matching(&h).unwrap().is_some(), res.matching.len() == n / 4);
        }
    }

    #[test]
    fn tripartite_matching_against_permutations(seed in any::<u64>(), min in 0u32..40) {
        let mut r = rng::substream(seed, "pm444");
        let l = random_link_graph(min, &mut r);
        let brute = (0..4usize).permutations(4).cartesian_product((0..4usize).permutations(4))
            .any(|(p, q)| (0..4).all(|i| l.has(i, p[i], q[i])));
        let found = tripartite_pm_444(l);
        prop_assert_eq!(found.is_some(), brute);
        if let Some(m) = found {
            let m: Vec<Triple> = m.to_vec();
            prop_assert!(m.iter().all(|&(i, j, k)| l.has(i as usize, j as usize, k as usize)));
            prop_assert!(m.iter().map(|t| t.0).all_unique() && m.iter().map(|t| t.1).all_unique() && m.iter().map(|t| t.2).all_unique());
        }
    }

    #[test]
    fn hall_matching_against_brute_force(adj in proptest::collection::vec(proptest::collection::btree_set(0usize..5, 0..4), 1..5)) {
        let adjacency: Vec<Vec<usize>> = adj.iter().map(|s| s.iter().copied().collect()).collect();
        let brute = (0..5usize).permutations(adjacency.len()).any(|p| p.iter().zip(&adjacency).all(|(x, a)| a.contains(x)));
        match hall_matching(&adjacency, 5) {
            HallOutcome::Saturating(m) => {
                prop_assert!(brute);
                prop_assert!(m.iter().zip(&adjacency).all(|(x, a)| a.contains(x)));
                prop_assert!(m.iter().all_unique());
            }
            HallOutcome::Violator(q) => {
                prop_assert!(!brute);
                let nb: std::collections::BTreeSet<usize> = q.iter().flat_map(|&i| adjacency[i].iter().copied()).collect();
                prop_assert!(nb.len() < q.len());
            }
        }
    }
}

#[test]
fn extremal_constructions_have_no_perfect_matching() {
    for n in [8, 12, 16, 20] {
        let h = extremal_construction(n).unwrap();
        assert!(has_perfect_matching(&h).unwrap().is_none());
        let res = max_matching_exact(&h, u64::MAX).unwrap();
        assert_eq!(res.matching.len(), n / 4 - 1);
    }
}

#[test]
fn link_graph_masks_round_trip_through_hex() {
    let mut r = rng::substream(3, "hex");
    for _ in 0..100 {
        let l = random_link_graph(0, &mut r);
        assert_eq!(l.to_string().parse::<LinkGraph>().unwrap(), l);
        assert_eq!(l.to_string().len(), 16);
    }
}
