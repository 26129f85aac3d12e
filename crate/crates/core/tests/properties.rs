use hyperroute::adaptive::{greedy_until_stall, DisplacementMetric, DisplacementState};
use hyperroute::algebraic::{cayley_spectrum_characters, FamilyKind, GeneratorFamily};
use hyperroute::graphs::io::{parse_graph_file, write_graph, write_hypergraph, GraphFile};
use hyperroute::graphs::{
    build_projective_plane, build_random_regular_graph, build_random_regular_hypergraph, clique_expansion, voltage_covering, LiftConvention, VoltageAssignment,
};
use hyperroute::harness::{recommend, ExperimentConfig, Strategy};
use hyperroute::multiscale::{hierarchical_route, tower_route, HierarchySpec, TowerSpec};
use hyperroute::rng::{derive_seed, random_permutation, substream};
use hyperroute::route::{partial_matching_route, route, SigmaStrategy};
use hyperroute::spectral::spectrum;
use proptest::prelude::*;

fn perm(n: usize, seed: u64) -> Vec<usize> {
    random_permutation(n, &mut substream(seed, "prop", 0))
}

fn is_perm(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn valiant_schedules_realize_pi(half in 5usize..20, d in 3usize..6, gs in any::<u64>(), ps in any::<u64>(), derand in any::<bool>()) {
        let g = build_random_regular_graph(2 * half, d, gs).unwrap();
        let pi = perm(2 * half, ps);
        let strategy = if derand { SigmaStrategy::Derandomized } else { SigmaStrategy::Uniform };
        let r = route(&g, &pi, &strategy, ps).unwrap();
        prop_assert!(r.realized);
        prop_assert!(r.schedule.realizes(&pi));
        prop_assert!(r.schedule.validate(&g).is_ok());
        prop_assert_eq!(r.depth, r.schedule.depth());
    }

    #[test]
    fn capacity_bounds_every_step(half in 5usize..15, k in 1usize..6, seed in any::<u64>()) {
        let g = build_random_regular_graph(2 * half, 4, seed).unwrap();
        let pi = perm(2 * half, seed ^ 1);
        let r = partial_matching_route(&g, &pi, k, seed).unwrap();
        prop_assert!(r.schedule.realizes(&pi));
        prop_assert!(r.schedule.steps.iter().all(|s| s.len() <= k));
    }

    #[test]
    fn clique_expansion_degree(m in 3usize..12, d in 1usize..5, seed in any::<u64>()) {
        let h = build_random_regular_hypergraph(3 * m, d, 3, seed).unwrap();
        let g = clique_expansion(&h);
        prop_assert!((0..g.num_vertices()).all(|v| g.weighted_degree(v) == (2 * d) as u64));
    }

    #[test]
    fn regular_spectrum_shape(half in 4usize..25, d in 3usize..7, seed in any::<u64>()) {
        let g = build_random_regular_graph(2 * half, d, seed).unwrap();
        let s = spectrum(&g).unwrap();
        prop_assert!((s.lambda1 - d as f64).abs() < 1e-8);
        prop_assert!(s.eigenvalues.iter().sum::<f64>().abs() < 1e-7);
        prop_assert!(s.eigenvalues.iter().all(|x| x.abs() <= d as f64 + 1e-8));
        prop_assert!(s.beta >= 0.0 && s.beta <= 1.0 + 1e-9);
    }

    #[test]
    fn characters_match_dense(n in 5usize..10, seed in any::<u64>()) {
        let f = GeneratorFamily::new(FamilyKind::Random(seed), n, 4).unwrap();
        let chars = cayley_spectrum_characters(n, &f.generators()).unwrap();
        let dense = spectrum(&f.graph().unwrap()).unwrap();
        prop_assert_eq!(chars.eigenvalues.len(), n * n);
        let err = chars.eigenvalues.iter().zip(&dense.eigenvalues).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6);
    }

    #[test]
    fn graph_text_round_trip(half in 3usize..20, d in 1usize..5, seed in any::<u64>()) {
        let g = build_random_regular_graph(2 * half, d.min(2 * half - 1), seed).unwrap();
        prop_assert_eq!(parse_graph_file(&write_graph(&g)).unwrap(), GraphFile::Graph(g));
        let h = build_random_regular_hypergraph(3 * half, d, 3, seed).unwrap();
        prop_assert_eq!(parse_graph_file(&write_hypergraph(&h)).unwrap(), GraphFile::Hyper(h));
    }

    #[test]
    fn voltage_lifts_keep_degree(k in 1usize..6, v in proptest::collection::vec(0usize..6, 7)) {
        let fano = build_projective_plane(2).unwrap();
        let va = VoltageAssignment::new(fano, k, v.iter().map(|x| x % k).collect(), LiftConvention::FirstVertex).unwrap();
        let lift = voltage_covering(&va);
        prop_assert_eq!(lift.num_vertices(), 7 * k);
        prop_assert!(lift.is_regular());
        prop_assert_eq!(lift.d(), 3);
    }

    #[test]
    fn greedy_energy_never_increases(side in 3usize..8, seed in any::<u64>()) {
        let n = side * side;
        let overlay = build_random_regular_graph(n, 6, seed).unwrap();
        let pi = perm(n, seed ^ 7);
        let mut s = DisplacementState::new(&pi, DisplacementMetric::GridManhattan { n: side }).unwrap();
        let run = greedy_until_stall(&mut s, &overlay);
        prop_assert_eq!(run.violations, 0);
        prop_assert!(run.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(is_perm(&s.positions));
        prop_assert_eq!(s.phi(), s.recompute_phi());
    }

    #[test]
    fn random_permutations_are_permutations(n in 0usize..200, seed in any::<u64>()) {
        prop_assert!(is_perm(&perm(n, seed)));
        prop_assert_eq!(derive_seed(seed, "x", 3), derive_seed(seed, "x", 3));
    }

    #[test]
    fn config_overrides_round_trip(vals in proptest::collection::btree_map("[a-z][a-z_]{0,8}", "[a-z0-9,.:]{1,10}", 0..6)) {
        let reserved = ["experiment", "id", "seed", "trials", "format", "output"];
        let vals: std::collections::BTreeMap<String, String> = vals.into_iter().filter(|(k, _)| !reserved.contains(&k.as_str())).collect();
        let text: String = vals.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        prop_assert_eq!(ExperimentConfig::parse_kv(&text).unwrap().overrides, vals);
    }

    #[test]
    fn more_capacity_never_demotes(n in 4usize..5000, k in 1usize..5000) {
        let rank = |s: Strategy| [Strategy::SingleOverlay, Strategy::MultiLayer, Strategy::Hierarchical, Strategy::Grid].iter().position(|x| *x == s).unwrap();
        let a = recommend(k, 1, n, true).unwrap().strategy;
        let b = recommend(k + 1, 1, n, true).unwrap().strategy;
        prop_assert!(rank(b) <= rank(a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tower_routing_realizes_pi(seed in any::<u64>()) {
        let spec = TowerSpec::fano_example().unwrap();
        let pi = perm(spec.top_size(), seed);
        prop_assert!(tower_route(&spec, &pi, seed).unwrap().realized);
    }

    #[test]
    fn hierarchical_routing_realizes_pi(seed in any::<u64>()) {
        let spec = HierarchySpec::new(8, 2).unwrap();
        let pi = perm(64, seed);
        prop_assert!(hierarchical_route(&spec, &pi, seed).unwrap().realized);
    }
}
