use hypermatch::construct::{
    extremal_construction, extremal_parts, planted_pm_instance, random_dense_hypergraph, threshold,
};
use hypermatch::pipeline::{
    build_initial_cover, extend_cover_nine_sided, extend_cover_triples, extend_cover_two_classes,
    solve_pipeline, Path, PipelineConfig,
};
use hypermatch::solve::has_perfect_matching;
use hypermatch::Hypergraph;

/// The construction plus the fewest edges inside `B` that cover every `B` vertex.
fn repaired(n: usize, shift: usize) -> Hypergraph {
    let x = extremal_construction(n).unwrap();
    let (_, b) = extremal_parts(n).unwrap();
    let mut edges: Vec<Vec<usize>> = x.edges().map(<[usize]>::to_vec).collect();
    let k = b.len();
    for start in (0..k).step_by(4) {
        let mut e: Vec<usize> = (0..4).map(|i| b[(start + i + shift) % k]).collect();
        e.sort_unstable();
        edges.push(e);
    }
    edges.sort();
    edges.dedup();
    Hypergraph::new(n, 4, edges).unwrap()
}

#[test]
fn repaired_constructions_agree_with_the_oracle() {
    for n in [16, 20, 24] {
        for shift in 0..3 {
            let h = repaired(n, shift);
            assert!(h.min_degree(1).unwrap() >= threshold(n).unwrap());
            let (m, report) = solve_pipeline(&h, &PipelineConfig::default()).unwrap();
            let oracle = has_perfect_matching(&h).unwrap().is_some();
            assert_eq!(m.is_some(), oracle, "n = {n}");
            assert_eq!(report.path, Path::Extremal);
            assert!(!report.fallback_used);
            assert!(h.validate_matching(&m.unwrap()).perfect);
        }
    }
}

#[test]
fn below_threshold_constructions_have_no_matching() {
    for n in [8, 12, 16, 20] {
        let h = extremal_construction(n).unwrap();
        let (m, report) = solve_pipeline(&h, &PipelineConfig::default()).unwrap();
        assert!(m.is_none());
        assert!(has_perfect_matching(&h).unwrap().is_none());
        assert_eq!(report.fallback_outcome.as_deref(), Some("absent"));
    }
}

#[test]
fn cover_ops_keep_the_cover_valid() {
    for seed in 0..6 {
        let (h, _) = planted_pm_instance(24, 0.3, seed).unwrap();
        let universe: Vec<usize> = (0..24).collect();
        let cfg = PipelineConfig {
            l: 1,
            ..PipelineConfig::default()
        };
        let mut cover = build_initial_cover(&h, &universe, &cfg);
        // start from a partial cover so every op has leftover to work with
        cover.blocks.truncate(2);
        cover.leftover = universe
            .iter()
            .copied()
            .filter(|v| !cover.blocks.iter().any(|b| b.vertices().contains(v)))
            .collect();
        assert!(cover.verify(&h, &universe));
        let (c, g) = extend_cover_two_classes(&h, &cover, &cfg);
        assert!(g >= 0 && c.verify(&h, &universe));
        let (c, g) = extend_cover_nine_sided(&h, &c, &cfg);
        assert!(g >= 0 && c.verify(&h, &universe));
        let (c, g, _, _) = extend_cover_triples(&h, &c, &cfg, 0);
        assert!(g >= 0 && c.verify(&h, &universe));
        let m = c.matching();
        assert_eq!(m.len(), c.blocks.len() * c.class_size);
        assert!(h.validate_matching(&m).valid);
    }
}

#[test]
fn initial_cover_examples() {
    let k = Hypergraph::complete(16, 4).unwrap();
    let universe: Vec<usize> = (0..16).collect();
    let cover = build_initial_cover(&k, &universe, &PipelineConfig::default());
    assert!(cover.leftover.is_empty());
    assert_eq!(cover.blocks.len(), 4);
    let e = Hypergraph::empty(16, 4).unwrap();
    let cover = build_initial_cover(&e, &universe, &PipelineConfig::default());
    assert!(cover.blocks.is_empty());
    assert_eq!(cover.leftover, universe);
}

#[test]
fn dense_random_instances_are_solved_and_reproducible() {
    for seed in 0..5 {
        let h = random_dense_hypergraph(32, threshold(32).unwrap(), seed).unwrap();
        let cfg = PipelineConfig {
            seed,
            ..PipelineConfig::default()
        };
        let (m, report) = solve_pipeline(&h, &cfg).unwrap();
        assert!(h.validate_matching(m.as_ref().unwrap()).perfect);
        let (m2, report2) = solve_pipeline(&h, &cfg).unwrap();
        assert_eq!(m, m2);
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&report2).unwrap()
        );
    }
}

#[test]
fn report_has_the_stable_fields() {
    let k = Hypergraph::complete(24, 4).unwrap();
    let (_, report) = solve_pipeline(&k, &PipelineConfig::default()).unwrap();
    let v = serde_json::to_value(&report).unwrap();
    for field in [
        "path",
        "stages",
        "cover_trace",
        "absorber_stats",
        "fallback_used",
    ] {
        assert!(v.get(field).is_some(), "{field}");
    }
    assert_eq!(v["path"], "non-extremal");
}
