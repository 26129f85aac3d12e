use hyperroute::harness::{experiments, run_experiment, ExperimentConfig, Format};

/// Small-size overrides so every registered experiment runs quickly.
fn small(id: &str) -> ExperimentConfig {
    let c = ExperimentConfig::new(id);
    let c = match id {
        "grid_spectral" => c.with("sizes", "8"),
        "overlay_spectral_gain" => c.with("sizes", "64").with("layers", "1,2"),
        "overlay_routing" => c.with("sides", "6").with("layers", "0,1"),
        "sparse_dense" => c.with("n_atoms", "64"),
        "cayley_qr" => c.with("moduli", "7,11"),
        "cayley_families" => c.with("moduli", "7"),
        "cayley_affine" => c.with("moduli", "7").with("samples", "5"),
        "fano_covers" => c.with("ks", "2,3").with("samples", "10"),
        "covering_tower" => c.with("routed", "2"),
        "teleport_depth" => c.with("configs", "64:8"),
        "entanglement_crossover" => c.with("sides", "8"),
        "hybrid_teleport" => c.with("side", "8").with("d_ent", "8").with("thresholds", "2,4"),
        "greedy_stall" => c.with("sides", "4"),
        "energy_concentration" => c.with("sides", "6"),
        "hybrid_greedy" => c.with("side", "6"),
        "mw_selection" => c.with("side", "4"),
        "hierarchy" => c.with("configs", "8:2"),
        _ => c,
    };
    let trials = if id == "energy_concentration" { 20 } else { 2 };
    ExperimentConfig { trials: Some(trials), seed: 11, ..c }
}

#[test]
fn every_experiment_runs_and_is_deterministic() {
    std::env::set_var("HYPERROUTE_COMMIT", "test");
    for e in experiments() {
        for format in [Format::Csv, Format::Json, Format::Markdown] {
            let cfg = ExperimentConfig { format, ..small(e.id) };
            let (table, a) = run_experiment(&cfg).unwrap_or_else(|err| panic!("{}: {err}", e.id));
            assert!(!table.rows.is_empty(), "{} produced no rows", e.id);
            assert_eq!(table.provenance.id, e.id);
            let (_, b) = run_experiment(&cfg).unwrap();
            assert_eq!(a, b, "{} is not deterministic in {format:?}", e.id);
        }
    }
}

#[test]
fn seeds_change_stochastic_tables() {
    let a = run_experiment(&small("overlay_spectral_gain")).unwrap().1;
    let b = run_experiment(&ExperimentConfig { seed: 12, ..small("overlay_spectral_gain") }).unwrap().1;
    assert_ne!(a, b);
}

#[test]
fn output_file_matches_rendering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("qr.csv");
    let cfg = ExperimentConfig { format: Format::Csv, output: Some(path.clone()), ..small("cayley_qr") };
    let (_, text) = run_experiment(&cfg).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), text);
    assert!(text.lines().any(|l| l == "p,N,lambda_star,ramanujan_bound,ratio,ramanujan"));
}

#[test]
fn unknown_override_is_an_error() {
    let cfg = small("cayley_qr").with("moduluses", "7");
    assert!(run_experiment(&cfg).unwrap_err().to_string().contains("moduluses"));
}
