//! Registry of table-producing experiments.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;

use super::config::ExperimentConfig;
use super::table::{Cell, Provenance, Table};
use crate::adaptive::{concentration_check, greedy_table_row, hybrid_greedy_valiant, mw_experiment, MetricKind};
use crate::algebraic::{abelian_barrier_scan, affine_comparison, CayleyHost, FamilyKind, GeneratorFamily};
use crate::entangle::{crossover_row, entanglement_overlay, hybrid_teleport, teleport_route_depth};
use crate::error::{param, Error, Result};
use crate::graphs::{build_grid_hypergraph, build_projective_plane, build_random_regular_graph, clique_expansion, GridModel, GridSpec, LiftConvention};
use crate::multiscale::{
    expected_cross_fiber_fraction, hierarchy_experiment, search_ramanujan_voltages, tower_depth_table, tower_route, SearchMode, TowerSpec,
};
use crate::overlay::{effective_capacity, end_to_end_overlay_speedup, multilayer_beta_experiment, overlay_depth};
use crate::rng::derive_seed;
use crate::route::{depth_estimates, random_permutations, PathOracle, SigmaStrategy};
use crate::spectral::{exact_diameter, lambda_star_bound, spectrum_auto, tight_routing_coefficient};
use crate::stats::{median_usize, ols_slope};

/// Parameter access that records every value used, defaults included, so the
/// provenance header lists the complete configuration.
pub struct Params<'a> {
    cfg: &'a ExperimentConfig,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl<'a> Params<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Self { cfg, resolved: RefCell::new(BTreeMap::new()) }
    }

    pub fn seed(&self) -> u64 {
        self.cfg.seed
    }

    fn raw(&self, key: &str, default: String) -> String {
        let v = self.cfg.overrides.get(key).cloned().unwrap_or(default);
        self.resolved.borrow_mut().insert(key.into(), v.clone());
        v
    }

    pub fn trials(&self, default: usize) -> Result<usize> {
        let t = self.cfg.trials.unwrap_or(default);
        if t == 0 {
            return param("trials must be positive");
        }
        self.resolved.borrow_mut().insert("trials".into(), t.to_string());
        Ok(t)
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.raw(key, default.to_string());
        v.trim().parse().map_err(|_| Error::Parameter(format!("{key}: expected an integer, got '{v}'")))
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.raw(key, default.to_string());
        v.trim().parse().map_err(|_| Error::Parameter(format!("{key}: expected a number, got '{v}'")))
    }

    /// Comma-separated integers.
    pub fn list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        let d = default.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let v = self.raw(key, d);
        v.split(',').map(|s| s.trim().parse().map_err(|_| Error::Parameter(format!("{key}: expected integers, got '{v}'")))).collect()
    }

    /// Comma-separated `a:b` pairs.
    pub fn pairs(&self, key: &str, default: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
        let d = default.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(",");
        let v = self.raw(key, d);
        v.split(',')
            .map(|s| {
                let (a, b) = s.split_once(':').ok_or_else(|| Error::Parameter(format!("{key}: expected a:b pairs, got '{v}'")))?;
                let p = |x: &str| x.trim().parse::<usize>().map_err(|_| Error::Parameter(format!("{key}: expected integers, got '{v}'")));
                Ok((p(a)?, p(b)?))
            })
            .collect()
    }
}

/// A registered experiment.
pub struct ExperimentInfo {
    pub id: &'static str,
    pub description: &'static str,
    run: fn(&Params) -> Result<Table>,
}

pub fn experiments() -> &'static [ExperimentInfo] {
    EXPERIMENTS
}

const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo { id: "explicit_bounds", description: "routing-bound constants for Ramanujan (d, r) hypergraphs", run: explicit_bounds },
    ExperimentInfo { id: "grid_spectral", description: "spectral ratio and diameter of the 2D and 3D grid hypergraphs", run: grid_spectral },
    ExperimentInfo { id: "overlay_spectral_gain", description: "mean beta of unions of L random d0-regular overlays", run: spectral_gain },
    ExperimentInfo { id: "overlay_routing", description: "Valiant depth on layered overlays versus the grid", run: multilayer_routing },
    ExperimentInfo { id: "overlay_crosstalk", description: "effective capacity under inter-layer crosstalk", run: crosstalk },
    ExperimentInfo { id: "sparse_dense", description: "sparse versus dense overlays under bounded capacity", run: sparse_dense },
    ExperimentInfo { id: "cayley_qr", description: "lambda* of QR Cayley graphs on Z_p^2", run: qr_table },
    ExperimentInfo { id: "cayley_families", description: "beta of degree-8 Cayley families on Z_n^2", run: cayley_families },
    ExperimentInfo { id: "cayley_affine", description: "affine and translation intermediate permutations against random ones", run: affine },
    ExperimentInfo { id: "fano_covers", description: "Ramanujan fraction of k-fold Fano voltage covers", run: fano },
    ExperimentInfo { id: "covering_tower", description: "routing depth across the Fano covering tower", run: tower },
    ExperimentInfo { id: "teleport_depth", description: "teleportation depth on random overlays", run: teleport },
    ExperimentInfo { id: "entanglement_crossover", description: "entanglement break-even rounds", run: crossover },
    ExperimentInfo { id: "hybrid_teleport", description: "hybrid teleport/physical routing thresholds", run: hybrid_ent },
    ExperimentInfo { id: "greedy_stall", description: "greedy displacement matching until stall", run: greedy },
    ExperimentInfo { id: "energy_concentration", description: "tail fraction of per-step energy release", run: concentration },
    ExperimentInfo { id: "hybrid_greedy", description: "greedy followed by Valiant routing of the residual", run: hybrid_greedy },
    ExperimentInfo { id: "mw_selection", description: "multiplicative-weights overlay selection", run: mw },
    ExperimentInfo { id: "hierarchy", description: "hierarchical versus flat depth and tower prediction", run: hierarchy },
];

/// Commit of the working tree, from `HYPERROUTE_COMMIT` or `git`.
pub fn current_commit() -> String {
    if let Ok(c) = std::env::var("HYPERROUTE_COMMIT") {
        return c;
    }
    std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Run an experiment and, when `config.output` is set, write the rendered
/// table there. Returns the table and its rendering.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Table, String)> {
    let info = EXPERIMENTS.iter().find(|e| e.id == config.id).ok_or_else(|| {
        Error::Parameter(format!("unknown experiment '{}'; known: {}", config.id, EXPERIMENTS.iter().map(|e| e.id).collect::<Vec<_>>().join(", ")))
    })?;
    let params = Params::new(config);
    let mut table = (info.run)(&params)?;
    let resolved = params.resolved.into_inner();
    if let Some(k) = config.overrides.keys().find(|k| !resolved.contains_key(*k)) {
        return param(format!("experiment '{}' has no parameter '{k}'", config.id));
    }
    table.provenance =
        Provenance { id: config.id.clone(), seed: config.seed, commit: current_commit(), version: env!("CARGO_PKG_VERSION").into(), parameters: resolved };
    let text = table.render(config.format)?;
    if let Some(path) = &config.output {
        write_file(path, &text)?;
    }
    Ok((table, text))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

fn explicit_bounds(p: &Params) -> Result<Table> {
    let pairs = p.pairs("pairs", &[(3, 3), (5, 3), (10, 3), (3, 5), (5, 5), (10, 5)])?;
    let mut t = Table::new("Explicit routing bounds", &["d", "r", "beta", "d_prime", "rt_coefficient", "diameter_coefficient"]);
    for (d, r) in pairs {
        let b = lambda_star_bound(d, r)?;
        t.push(vec![
            Cell::int(d),
            Cell::int(r),
            Cell::f(b.beta, 3),
            Cell::int(d * (r - 1)),
            Cell::f(tight_routing_coefficient(d, r)?, 1),
            Cell::f(1.0 / (1.0 / b.beta).log2(), 2),
        ]);
    }
    Ok(t)
}

/// Degree, diameter and `β` of the simple support of a grid model's clique
/// expansion.
pub fn grid_model_spectrum(n: usize, model: GridModel) -> Result<(usize, usize, f64)> {
    let g = clique_expansion(&build_grid_hypergraph(&GridSpec::new(n, 3, model))?).support();
    let degree = (0..g.num_vertices()).map(|v| g.degree(v)).max().unwrap_or(0);
    Ok((degree, exact_diameter(&g)?, spectrum_auto(&g)?.beta))
}

fn grid_spectral(p: &Params) -> Result<Table> {
    let sizes = p.list("sizes", &[8, 10, 12, 16])?;
    let mut t = Table::new("Grid hypergraph spectral parameters (r = 3)", &["n", "N", "d_2d", "diam_2d", "beta_2d", "d_3d", "diam_3d", "beta_3d", "gap_ratio"]);
    for n in sizes {
        let (d2, diam2, b2) = grid_model_spectrum(n, GridModel::TwoD)?;
        let (d3, diam3, b3) = grid_model_spectrum(n, GridModel::ThreeD)?;
        t.push(vec![
            Cell::int(n),
            Cell::int(n * n),
            Cell::int(d2),
            Cell::int(diam2),
            Cell::f(b2, 3),
            Cell::int(d3),
            Cell::int(diam3),
            Cell::f(b3, 3),
            Cell::f((1.0 - b3) / (1.0 - b2), 2),
        ]);
    }
    Ok(t)
}

fn spectral_gain(p: &Params) -> Result<Table> {
    let sizes = p.list("sizes", &[64, 100, 144, 256])?;
    let layers = p.list("layers", &[1, 2, 4, 8, 16])?;
    let d0 = p.usize("d0", 8)?;
    let trials = p.trials(5)?;
    let mut cols = vec!["N".to_string()];
    cols.extend(layers.iter().map(|l| format!("L={l}")));
    cols.push("all_ramanujan".into());
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("Mean beta of unions of L random overlays", &col_refs);
    for n in sizes {
        let rows = multilayer_beta_experiment(n, d0, &layers, trials, p.seed())?;
        let mut row = vec![Cell::int(n)];
        row.extend(rows.iter().map(|r| Cell::f(r.mean_beta, 3)));
        row.push(Cell::Bool(rows.iter().all(|r| r.all_ramanujan)));
        t.push(row);
    }
    Ok(t)
}

fn multilayer_routing(p: &Params) -> Result<Table> {
    let sides = p.list("sides", &[10, 12])?;
    let layers = p.list("layers", &[0, 1, 2, 4])?;
    let d0 = p.usize("d0", 8)?;
    let trials = p.trials(20)?;
    let mut t = Table::new("Valiant depth on layered overlays (median C + D)", &["N", "model", "d_eff", "beta", "t_med", "speedup"]);
    for side in sides {
        let grid_degree = clique_expansion(&build_grid_hypergraph(&GridSpec::new(side, 3, GridModel::TwoD))?).max_weighted_degree();
        for &l in &layers {
            let r = end_to_end_overlay_speedup(side, l, d0, trials, p.seed())?;
            let (model, d_eff, beta, depth) = if l == 0 {
                ("2D grid".to_string(), grid_degree as usize, r.grid_beta, r.grid_depth)
            } else {
                (format!("L={l}"), l * d0, r.overlay_beta, r.overlay_depth)
            };
            t.push(vec![Cell::int(r.n), Cell::text(model), Cell::int(d_eff), Cell::f(beta, 3), Cell::f(depth, 1), Cell::f(r.grid_depth / depth, 2)]);
        }
    }
    Ok(t)
}

fn crosstalk(p: &Params) -> Result<Table> {
    let k0 = p.usize("k0", 32)?;
    let layers = p.usize("layers", 4)?;
    let gammas = p.raw("gammas", "0,0.2,0.5,0.8".into());
    let mut t = Table::new("Effective capacity under crosstalk", &["gamma", "direct", "checkerboard", "value", "retention"]);
    for g in gammas.split(',') {
        let gamma: f64 = g.trim().parse().map_err(|_| Error::Parameter(format!("gammas: bad value '{g}'")))?;
        if !(0.0..=1.0).contains(&gamma) {
            return param("crosstalk coefficient must lie in [0, 1]");
        }
        let c = effective_capacity(layers, k0, gamma);
        t.push(vec![
            Cell::f(gamma, 2),
            Cell::f(c.direct, 2),
            c.checkerboard.map_or(Cell::text("-"), |v| Cell::f(v, 2)),
            Cell::f(c.value, 2),
            Cell::f(c.value / (layers * k0) as f64, 3),
        ]);
    }
    Ok(t)
}

fn sparse_dense(p: &Params) -> Result<Table> {
    let n = p.usize("n_atoms", 144)?;
    let sparse = p.usize("d_sparse", 8)?;
    let dense = p.usize("d_dense", 12)?;
    let trials = p.trials(20)?;
    let perms = random_permutations(n, trials, derive_seed(p.seed(), "sparse-pi", 0));
    let t_med = |d: usize| -> Result<usize> {
        let g = build_random_regular_graph(n, d, derive_seed(p.seed(), "sparse-overlay", d as u64))?;
        let depths = depth_estimates(&PathOracle::new(&g)?, &perms, &SigmaStrategy::Uniform, p.seed())?;
        Ok(median_usize(&depths).ceil() as usize)
    };
    let (ts, td) = (t_med(sparse)?, t_med(dense)?);
    let mut t = Table::new("Overlay depth under bounded capacity", &["capacity", "k", "t_sparse", "t_dense", "winner"]);
    let caps = [("N/2", n / 2), ("N/4", n / 4), ("N/8", n / 8), ("N/log N", (n as f64 / log2(n)).floor() as usize)];
    for (label, k) in caps {
        let (a, b) = (overlay_depth(ts, n, k), overlay_depth(td, n, k));
        let winner = match a.cmp(&b) {
            std::cmp::Ordering::Less => "sparse",
            std::cmp::Ordering::Equal => "tie",
            std::cmp::Ordering::Greater => "dense",
        };
        t.push(vec![Cell::text(label), Cell::int(k), Cell::int(a), Cell::int(b), Cell::text(winner)]);
    }
    Ok(t)
}

fn qr_table(p: &Params) -> Result<Table> {
    let moduli = p.list("moduli", &[7, 11, 17, 31, 53, 97])?;
    let degree = p.usize("degree", 8)?;
    let mut t = Table::new("QR Cayley graphs on Z_p^2", &["p", "N", "lambda_star", "ramanujan_bound", "ratio", "ramanujan"]);
    for r in abelian_barrier_scan(FamilyKind::Qr, degree, &moduli)? {
        t.push(vec![
            Cell::int(r.n),
            Cell::int(r.n * r.n),
            Cell::f(r.lambda_star, 2),
            Cell::f(2.0 * ((degree - 1) as f64).sqrt(), 2),
            Cell::f(r.ramanujan_ratio, 2),
            Cell::Bool(r.ramanujan),
        ]);
    }
    Ok(t)
}

fn cayley_families(p: &Params) -> Result<Table> {
    let moduli = p.list("moduli", &[7, 11, 17, 31, 41])?;
    let mut cols = vec!["family".to_string()];
    cols.extend(moduli.iter().map(|n| format!("n={n}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("Spectral ratio of degree-8 Cayley graphs on Z_n^2", &col_refs);
    for (name, kind) in [("qr", FamilyKind::Qr), ("margulis", FamilyKind::Margulis), ("random (median)", FamilyKind::Random(p.seed()))] {
        let mut row = vec![Cell::text(name)];
        row.extend(abelian_barrier_scan(kind, 8, &moduli)?.iter().map(|r| Cell::f(r.beta, 3)));
        t.push(row);
    }
    Ok(t)
}

/// Degree-8 QR Cayley host on `Z_n^2`.
pub fn qr_host(n: usize) -> Result<CayleyHost> {
    CayleyHost::new(n, &GeneratorFamily::new(FamilyKind::Qr, n, 8)?.generators())
}

fn affine(p: &Params) -> Result<Table> {
    let moduli = p.list("moduli", &[7, 11])?;
    let trials = p.trials(50)?;
    let samples = p.usize("samples", crate::algebraic::DEFAULT_AFFINE_SAMPLES)?;
    let mut t = Table::new(
        "Intermediate permutations on QR Cayley hosts (median C + D)",
        &["n", "N", "random", "affine", "affine_improvement", "translation", "translation_improvement"],
    );
    for n in moduli {
        let c = affine_comparison(&qr_host(n)?, trials, samples, p.seed())?;
        t.push(vec![
            Cell::int(n),
            Cell::int(n * n),
            Cell::f(c.random_median, 1),
            Cell::f(c.affine_median, 1),
            Cell::f(c.affine_improvement, 3),
            Cell::f(c.translation_median, 1),
            Cell::f(c.translation_improvement, 3),
        ]);
    }
    Ok(t)
}

fn fano(p: &Params) -> Result<Table> {
    let ks = p.list("ks", &[2, 3, 4, 5, 7])?;
    let samples = p.usize("samples", 200)?;
    let fano = build_projective_plane(2)?;
    let mut t = Table::new("Fano plane voltage covers", &["k", "N", "mode", "tested", "best_beta", "mean_beta", "ramanujan_fraction"]);
    for k in ks {
        let exhaustive = k == 2;
        let mode = if exhaustive { SearchMode::Exhaustive } else { SearchMode::Sample { m: samples, seed: derive_seed(p.seed(), "fano-voltages", k as u64) } };
        let s = search_ramanujan_voltages(&fano, k, mode, LiftConvention::default())?;
        t.push(vec![
            Cell::int(k),
            Cell::int(7 * k),
            Cell::text(if exhaustive { "exhaustive" } else { "sampled" }),
            Cell::int(s.tested),
            Cell::f(s.best_beta, 3),
            Cell::f(s.mean_beta, 3),
            Cell::f(s.fraction, 3),
        ]);
    }
    Ok(t)
}

fn tower(p: &Params) -> Result<Table> {
    let trials = p.trials(100)?;
    let routed = p.usize("routed", 20)?;
    let spec = TowerSpec::fano_example()?;
    let mut t = Table::new("Routing depth across the Fano covering tower", &["level", "N", "beta", "t_med", "t_over_log2n", "recursive_total", "cross_fiber"]);
    let top = spec.top_size();
    let runs = random_permutations(top, routed, derive_seed(p.seed(), "tower-route-pi", 0))
        .iter()
        .enumerate()
        .map(|(i, pi)| tower_route(&spec, pi, derive_seed(p.seed(), "tower-route", i as u64)))
        .collect::<Result<Vec<_>>>()?;
    if runs.iter().any(|r| !r.realized) {
        return Err(Error::Construction("tower routing failed to realize a permutation".into()));
    }
    let total = median_usize(&runs.iter().map(|r| r.total).collect::<Vec<_>>());
    let cross = expected_cross_fiber_fraction(&spec)?;
    let rows = tower_depth_table(&spec, trials, p.seed())?;
    let last = rows.len() - 1;
    for r in rows {
        let top_level = r.level == last;
        t.push(vec![
            Cell::text(format!("H{}", r.level)),
            Cell::int(r.n),
            Cell::f(r.beta, 3),
            Cell::f(r.t_med, 1),
            Cell::f(r.t_over_log, 2),
            if top_level { Cell::f(total, 1) } else { Cell::text("-") },
            if top_level { Cell::f(cross, 3) } else { Cell::text("-") },
        ]);
    }
    Ok(t)
}

fn teleport(p: &Params) -> Result<Table> {
    let configs = p.pairs("configs", &[(100, 8), (100, 16), (256, 8), (256, 16), (256, 32)])?;
    let mut t = Table::new("Teleportation depth on random overlays", &["N", "d_ent", "beta", "t_route", "t_over_log2n"]);
    for (n, d) in configs {
        let beta = spectrum_auto(&entanglement_overlay(n, d, p.seed())?)?.beta;
        let tr = teleport_route_depth(n, d, p.seed())?;
        t.push(vec![Cell::int(n), Cell::int(d), Cell::f(beta, 3), Cell::int(tr), Cell::f(tr as f64 / log2(n), 2)]);
    }
    Ok(t)
}

fn crossover(p: &Params) -> Result<Table> {
    let sides = p.list("sides", &[16, 32, 64, 100, 200])?;
    let d = p.usize("d_ent", 16)?;
    let mut t = Table::new("Entanglement break-even", &["N", "t_route", "t_phys", "t_dist", "r_break", "sqrt_n_over_log2n"]);
    for n in sides {
        let r = crossover_row(n, d, p.seed())?;
        t.push(vec![Cell::int(r.n_atoms), Cell::int(r.t_route), Cell::int(r.t_phys), Cell::int(r.t_dist), Cell::f(r.r_break, 2), Cell::f(r.naive, 1)]);
    }
    Ok(t)
}

fn hybrid_ent(p: &Params) -> Result<Table> {
    let n = p.usize("side", 32)?;
    let d = p.usize("d_ent", 16)?;
    let thresholds = p.list("thresholds", &[4, 8, 12, 16])?;
    let mut t = Table::new("Hybrid teleport/physical routing", &["d_thresh", "fraction_teleported", "t_teleport", "t_cleanup", "t_total", "t_phys", "speedup"]);
    for th in thresholds {
        let h = hybrid_teleport(n, th, d, p.seed())?;
        t.push(vec![
            Cell::int(th),
            Cell::f(h.fraction_teleported, 3),
            Cell::int(h.t_teleport),
            Cell::int(h.t_cleanup),
            Cell::int(h.t_total),
            Cell::int(h.t_phys),
            Cell::f(h.speedup, 2),
        ]);
    }
    Ok(t)
}

fn greedy(p: &Params) -> Result<Table> {
    let sides = p.list("sides", &[4, 6, 8, 10, 12, 16])?;
    let d = p.usize("d", 8)?;
    let trials = p.trials(20)?;
    let metric = match p.raw("metric", "grid".into()).as_str() {
        "grid" => MetricKind::GridManhattan,
        "overlay" => MetricKind::OverlayBfs,
        other => return param(format!("metric: expected grid or overlay, got '{other}'")),
    };
    let mut t = Table::new("Greedy displacement matching", &["n", "N", "step0_delta", "t_stall", "stall_fraction", "steps", "violations"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for n in sides {
        let r = greedy_table_row(n, d, trials, p.seed(), metric)?;
        xs.push(log2(n * n));
        ys.push(r.t_stall);
        t.push(vec![
            Cell::int(n),
            Cell::int(r.n_atoms),
            Cell::f(r.step0_delta, 2),
            Cell::f(r.t_stall, 2),
            Cell::f(r.stall_fraction, 3),
            Cell::int(r.steps),
            Cell::int(r.violations),
        ]);
    }
    if xs.len() >= 2 {
        t.title = format!("Greedy displacement matching (T_stall slope vs log2 N: {:.2})", ols_slope(&xs, &ys));
    }
    Ok(t)
}

fn concentration(p: &Params) -> Result<Table> {
    let sides = p.list("sides", &[8, 10, 12, 14])?;
    let d = p.usize("d", 8)?;
    let trials = p.trials(20)?;
    let mut t = Table::new("Energy-release tail fraction", &["n", "N", "alpha", "bins", "samples"]);
    for n in sides {
        let c = concentration_check(n, d, trials, p.seed())?;
        t.push(vec![Cell::int(n), Cell::int(n * n), Cell::f(c.alpha, 3), Cell::int(c.bins), Cell::int(c.samples)]);
    }
    Ok(t)
}

fn hybrid_greedy(p: &Params) -> Result<Table> {
    let n = p.usize("side", 16)?;
    let d = p.usize("d", 8)?;
    let trials = p.trials(5)?;
    let mut t = Table::new(
        "Greedy then Valiant (measured C + D, and the energy-scaled model)",
        &["trial", "beta", "t_stall", "stall_fraction", "t_residual", "t_total", "t_pure", "speedup", "model_total", "model_pure", "model_speedup"],
    );
    for i in 0..trials as u64 {
        let h = hybrid_greedy_valiant(n, d, derive_seed(p.seed(), "hybrid-greedy", i))?;
        t.push(vec![
            Cell::int(i),
            Cell::f(h.beta, 3),
            Cell::int(h.t_stall),
            Cell::f(h.stall_fraction, 3),
            Cell::int(h.t_residual),
            Cell::int(h.t_total),
            Cell::int(h.t_pure),
            Cell::f(h.speedup, 2),
            Cell::f(h.model_total, 1),
            Cell::f(h.model_pure, 1),
            Cell::f(h.model_speedup, 2),
        ]);
    }
    Ok(t)
}

fn mw(p: &Params) -> Result<Table> {
    let n = p.usize("side", 6)?;
    let eta = p.f64("eta", crate::adaptive::DEFAULT_ETA)?;
    let trials = p.trials(20)?;
    let s = mw_experiment(n, trials, eta, p.seed())?;
    let mut t = Table::new("Multiplicative-weights overlay selection", &["N", "mean_t_mw", "mean_t_best", "mean_cr", "min_cr", "max_cr", "capped"]);
    t.push(vec![
        Cell::int(s.n_atoms),
        Cell::f(s.mean_t_mw, 2),
        Cell::f(s.mean_t_best, 2),
        Cell::f(s.mean_cr, 3),
        Cell::f(s.min_cr, 3),
        Cell::f(s.max_cr, 3),
        Cell::int(s.capped),
    ]);
    Ok(t)
}

fn hierarchy(p: &Params) -> Result<Table> {
    let configs = p.pairs("configs", &[(8, 2), (16, 4), (32, 4), (64, 8)])?;
    let trials = p.trials(20)?;
    let mut t = Table::new(
        "Hierarchical versus flat routing depth",
        &["n", "N", "b", "L", "t_hier", "t_flat", "ratio", "t_tower", "tower_gap", "local_sort", "realized"],
    );
    for (n, b) in configs {
        let r = hierarchy_experiment(n, b, trials, p.seed())?;
        t.push(vec![
            Cell::int(n),
            Cell::int(n * n),
            Cell::int(b),
            Cell::int(r.levels),
            Cell::f(r.t_hier, 1),
            Cell::f(r.t_flat, 1),
            Cell::f(r.ratio, 3),
            Cell::f(r.t_tower, 1),
            Cell::f(r.tower_gap, 3),
            Cell::f(r.local_depth, 1),
            Cell::Bool(r.all_realized),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Format;

    #[test]
    fn ids_are_unique() {
        let mut ids: Vec<_> = experiments().iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), experiments().len());
    }

    #[test]
    fn unknown_id_and_parameter() {
        assert!(run_experiment(&ExperimentConfig::new("nope")).is_err());
        assert!(run_experiment(&ExperimentConfig::new("explicit_bounds").with("bogus", 1)).is_err());
    }

    #[test]
    fn explicit_bounds_table() {
        let mut c = ExperimentConfig::new("explicit_bounds");
        c.format = Format::Csv;
        let (t, text) = run_experiment(&c).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert!(text.contains("param pairs: 3:3,5:3,10:3,3:5,5:5,10:5"));
        assert_eq!(t.cell(0, "rt_coefficient"), Some(&Cell::f(tight_routing_coefficient(3, 3).unwrap(), 1)));
    }
}
