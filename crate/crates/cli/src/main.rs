use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hyperroute::algebraic::{FamilyKind, GeneratorFamily};
use hyperroute::graphs::io::{parse_graph_file, write_graph, write_hypergraph, GraphFile};
use hyperroute::graphs::{
    build_grid_hypergraph, build_projective_plane, build_random_regular_graph, build_random_regular_hypergraph, GridModel, GridSpec, LiftConvention,
};
use hyperroute::harness::{experiments, recommend, run_experiment, verify, ExperimentConfig, Targets, CRITERIA, OUTPUT_DIR_ENV};
use hyperroute::multiscale::{search_ramanujan_voltages, SearchMode};
use hyperroute::rng::{random_permutation, substream};
use hyperroute::route::{route_with_oracle, PathOracle, SigmaStrategy};
use hyperroute::spectral::{check_ramanujan_hypergraph, spectrum, spectrum_auto, spectrum_extreme};

#[derive(Parser)]
#[command(name = "hyperroute", version, about = "Permutation routing on Ramanujan hypergraphs and expander overlays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a hypergraph or graph and print it in the text format.
    Build(BuildArgs),
    /// Spectral certificate of graph files as JSON, one object per line.
    Spectrum(SpectrumArgs),
    /// Route one permutation and report depth, congestion and dilation as JSON.
    Route(RouteArgs),
    /// Multi-layer overlay tables.
    OverlayExperiment(OverlayArgs),
    /// Cayley graphs on Z_n^2; `--report` picks the output.
    Cayley(CayleyArgs),
    /// Voltage search and covering-tower routing.
    Tower(TowerArgs),
    /// Hierarchical versus flat routing.
    Hierarchy(HierarchyArgs),
    /// Entanglement-assisted routing tables.
    Entangle(EntangleArgs),
    /// Greedy displacement matching and overlay selection.
    Adaptive(AdaptiveArgs),
    /// Pick a routing architecture for a device.
    Recommend(RecommendArgs),
    /// Run the numeric verification suite; exits nonzero on any failure.
    Verify(VerifyArgs),
    /// Run a registered experiment by id, optionally from a config file.
    Run(RunArgs),
    /// List registered experiments.
    List,
}

/// Options shared by every table-producing command. Precedence: config file,
/// then command flags, then `--set`.
#[derive(Args, Clone, Default)]
struct TableOpts {
    /// Key-value config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Table format: csv, json or markdown.
    #[arg(long = "out", visible_alias = "format", value_name = "FORMAT")]
    format: Option<String>,
    /// Output file. Defaults to `$HYPERROUTE_OUT_DIR/<experiment>.<ext>` when
    /// that variable is set; the table is always printed.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Extra experiment parameter.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Copy, Clone, ValueEnum)]
enum BuildKind {
    /// Projective plane PG(2, q) as an r = q + 1 uniform hypergraph.
    Projective,
    RandomHypergraph,
    RandomGraph,
    Grid2d,
    Grid3d,
    CayleyQr,
    CayleyMargulis,
    CayleyRandom,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    kind: BuildKind,
    /// Vertex count, grid side or Cayley modulus.
    #[arg(long)]
    n: Option<usize>,
    /// Vertex degree, or Cayley degree.
    #[arg(long)]
    d: Option<usize>,
    /// Hyperedge size.
    #[arg(long, default_value_t = 3)]
    r: usize,
    /// Projective plane order.
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SpectrumMode {
    /// Dense eigendecomposition up to a size limit, extreme pair beyond.
    Auto,
    Dense,
    Extreme,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Graph files; `-` reads standard input.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = SpectrumMode::Auto)]
    mode: SpectrumMode,
}

#[derive(Copy, Clone, ValueEnum)]
enum StrategyArg {
    Uniform,
    Derandomized,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    graph: PathBuf,
    /// `random:SEED` or a file of whitespace-separated targets.
    #[arg(long, default_value = "random:0")]
    perm: String,
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    strategy: StrategyArg,
    /// Maximum swaps per matching step.
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the schedule, one step per line as `u:v` pairs.
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum OverlayReport {
    Gain,
    Routing,
    Crosstalk,
    SparseDense,
}

#[derive(Args)]
struct OverlayArgs {
    #[arg(long, value_enum, default_value_t = OverlayReport::Gain)]
    report: OverlayReport,
    /// Atom counts (gain, sparse-dense) or grid sides (routing), comma-separated.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d0: Option<usize>,
    /// Layer counts, comma-separated.
    #[arg(long)]
    layers: Option<String>,
    #[command(flatten)]
    table: TableOpts,
}

#[derive(Copy, Clone, ValueEnum)]
enum FamilyArg {
    Qr,
    Margulis,
    Random,
}

#[derive(Copy, Clone, ValueEnum)]
enum CayleyReport {
    Spectrum,
    Barrier,
    Affine,
    Qr,
}

#[derive(Args)]
struct CayleyArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Qr)]
    family: FamilyArg,
    /// Modulus, or comma-separated moduli for the table reports.
    #[arg(long, default_value = "7")]
    n: String,
    #[arg(long, default_value_t = 8)]
    degree: usize,
    /// Seed of the random family.
    #[arg(long, default_value_t = 0)]
    family_seed: u64,
    #[arg(long, value_enum, default_value_t = CayleyReport::Spectrum)]
    report: CayleyReport,
    #[command(flatten)]
    table: TableOpts,
}

#[derive(Copy, Clone, ValueEnum)]
enum SearchArg {
    Exhaustive,
    Sampled,
}

#[derive(Copy, Clone, ValueEnum)]
enum TowerReport {
    Search,
    Depth,
}

#[derive(Args)]
struct TowerArgs {
    /// Base hypergraph: fano or pg3.
    #[arg(long, default_value = "fano")]
    base: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Tower height; the tabulated Fano tower has three levels.
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, value_enum, default_value_t = SearchArg::Exhaustive)]
    search: SearchArg,
    /// Assignments drawn in sampled mode.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = TowerReport::Search)]
    report: TowerReport,
    #[command(flatten)]
    table: TableOpts,
}

#[derive(Args)]
struct HierarchyArgs {
    /// Grid side.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Block side.
    #[arg(long, default_value_t = 4)]
    b: usize,
    #[command(flatten)]
    table: TableOpts,
}

#[derive(Copy, Clone, ValueEnum)]
enum EntangleReport {
    Crossover,
    Hybrid,
    Teleport,
}

#[derive(Args)]
struct EntangleArgs {
    /// Grid side.
    #[arg(long)]
    n: Option<usize>,
    /// Entanglement overlay degree.
    #[arg(long)]
    dent: Option<usize>,
    #[arg(long, value_enum, default_value_t = EntangleReport::Crossover)]
    report: EntangleReport,
    #[command(flatten)]
    table: TableOpts,
}

#[derive(Copy, Clone, ValueEnum)]
enum AdaptiveReport {
    Stall,
    Concentration,
    Hybrid,
    Mw,
}

#[derive(Args)]
struct AdaptiveArgs {
    /// Grid side.
    #[arg(long)]
    n: Option<usize>,
    /// Overlay degree.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum, default_value_t = AdaptiveReport::Stall)]
    report: AdaptiveReport,
    #[command(flatten)]
    table: TableOpts,
}

#[derive(Args)]
struct RecommendArgs {
    /// Overlay capacity: simultaneous long-range swaps per step.
    #[arg(long)]
    k0: usize,
    /// Routing rounds per circuit.
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Number of atoms.
    #[arg(long)]
    n: usize,
    /// The permutation is not known in advance.
    #[arg(long)]
    pi_unknown: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion numbers; all when absent.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print every check, not only failures.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment id; may also come from the config file.
    id: Option<String>,
    #[command(flatten)]
    table: TableOpts,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Build(a) => build(a)?,
        Command::Spectrum(a) => spectrum_cmd(a)?,
        Command::Route(a) => route_cmd(a)?,
        Command::OverlayExperiment(a) => overlay(a)?,
        Command::Cayley(a) => cayley(a)?,
        Command::Tower(a) => tower(a)?,
        Command::Hierarchy(a) => table("hierarchy", vec![("configs", Some(format!("{}:{}", a.n, a.b)))], &a.table)?,
        Command::Entangle(a) => entangle(a)?,
        Command::Adaptive(a) => adaptive(a)?,
        Command::Recommend(a) => {
            let r = recommend(a.k0, a.rounds, a.n, !a.pi_unknown)?;
            if a.json {
                out(&format!("{}\n", serde_json::to_string_pretty(&r)?))?;
            } else {
                out(&r.summary())?;
            }
        }
        Command::Verify(a) => return verify_cmd(a),
        Command::Run(a) => {
            let cfg = config(a.id.as_deref(), Vec::new(), &a.table)?;
            emit(&cfg)?;
        }
        Command::List => {
            for e in experiments() {
                out(&format!("{:<26} {}\n", e.id, e.description))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Write to stdout; a closed pipe (for example `| head`) ends quietly.
fn out(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        r => Ok(r?),
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => out(text),
    }
}

fn build(a: BuildArgs) -> Result<()> {
    let need = |v: Option<usize>, flag: &str| v.with_context(|| format!("--{flag} is required for this kind"));
    let grid = |model| -> Result<String> { Ok(write_hypergraph(&build_grid_hypergraph(&GridSpec::new(need(a.n, "n")?, a.r, model))?)) };
    let cayley = |kind| -> Result<String> {
        let f = GeneratorFamily::new(kind, need(a.n, "n")?, a.d.unwrap_or(8))?;
        Ok(write_graph(&f.graph()?))
    };
    let text = match a.kind {
        BuildKind::Projective => write_hypergraph(&build_projective_plane(a.q)?),
        BuildKind::RandomHypergraph => write_hypergraph(&build_random_regular_hypergraph(need(a.n, "n")?, need(a.d, "d")?, a.r, a.seed)?),
        BuildKind::RandomGraph => write_graph(&build_random_regular_graph(need(a.n, "n")?, need(a.d, "d")?, a.seed)?),
        BuildKind::Grid2d => grid(GridModel::TwoD)?,
        BuildKind::Grid3d => grid(GridModel::ThreeD)?,
        BuildKind::CayleyQr => cayley(FamilyKind::Qr)?,
        BuildKind::CayleyMargulis => cayley(FamilyKind::Margulis)?,
        BuildKind::CayleyRandom => cayley(FamilyKind::Random(a.seed))?,
    };
    write_or_print(&text, a.output.as_deref())
}

fn spectrum_cmd(a: SpectrumArgs) -> Result<()> {
    for path in &a.files {
        let file = parse_graph_file(&read_input(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let g = file.to_graph();
        let s = match a.mode {
            SpectrumMode::Auto => spectrum_auto(&g)?,
            SpectrumMode::Dense => spectrum(&g)?,
            SpectrumMode::Extreme => spectrum_extreme(&g)?,
        };
        let ramanujan = match &file {
            GraphFile::Hyper(h) => check_ramanujan_hypergraph(h, &s)?,
            GraphFile::Graph(_) => s.ramanujan,
        };
        let obj = json!({
            "file": path.display().to_string(),
            "N": g.num_vertices(),
            "lambda1": s.lambda1,
            "lambda2": s.lambda2,
            "lambdaN": s.lambda_n,
            "lambda_star": s.lambda_star,
            "beta": s.beta,
            "ramanujan": ramanujan,
            "diameter_bound": s.diameter_bound,
        });
        out(&format!("{obj}\n"))?;
    }
    Ok(())
}

fn parse_perm(spec: &str, n: usize) -> Result<Vec<usize>> {
    if let Some(seed) = spec.strip_prefix("random:") {
        let seed: u64 = seed.parse().context("random:SEED needs an integer seed")?;
        return Ok(random_permutation(n, &mut substream(seed, "cli-perm", 0)));
    }
    read_input(Path::new(spec))?.split_whitespace().map(|t| t.parse::<usize>().with_context(|| format!("bad permutation entry '{t}'"))).collect()
}

fn route_cmd(a: RouteArgs) -> Result<()> {
    let g = parse_graph_file(&read_input(&a.graph)?)?.to_graph();
    let pi = parse_perm(&a.perm, g.num_vertices())?;
    let strategy = match a.strategy {
        StrategyArg::Uniform => SigmaStrategy::Uniform,
        StrategyArg::Derandomized => SigmaStrategy::Derandomized,
    };
    let oracle = PathOracle::new(&g)?;
    let r = route_with_oracle(&oracle, &pi, &strategy, a.seed, a.capacity)?;
    if let Some(p) = &a.schedule {
        std::fs::write(p, r.schedule.to_text()).with_context(|| format!("writing {}", p.display()))?;
    }
    let obj = json!({
        "N": g.num_vertices(),
        "T": r.depth,
        "C": r.measured_c,
        "D": r.measured_d,
        "lmr_estimate": r.lmr_estimate,
        "phase_depths": r.phase_depths,
        "realized": r.realized,
        "fallback": r.fallback,
    });
    out(&format!("{}\n", serde_json::to_string_pretty(&obj)?))?;
    if !r.realized {
        bail!("schedule does not realize the permutation");
    }
    Ok(())
}

/// Config for experiment `id`: file first, then the command's own flags,
/// then the shared flags and `--set`.
fn config(id: Option<&str>, params: Vec<(&str, Option<String>)>, opts: &TableOpts) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::parse_kv(&read_input(p)?).with_context(|| format!("config {}", p.display()))?,
        None => ExperimentConfig::new(""),
    };
    if let Some(id) = id {
        cfg.id = id.into();
    }
    if cfg.id.is_empty() {
        bail!("no experiment id given (argument or `experiment = ...` in the config)");
    }
    for (k, v) in params {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(t) = opts.trials {
        cfg.trials = Some(t);
    }
    if let Some(f) = &opts.format {
        cfg.set("format", f)?;
    }
    if let Some(o) = &opts.output {
        cfg.output = Some(o.clone());
    }
    for kv in &opts.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if cfg.output.is_none() {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.output = Some(PathBuf::from(dir).join(format!("{}.{}", cfg.id, cfg.format.extension())));
        }
    }
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig) -> Result<()> {
    let (_, text) = run_experiment(cfg)?;
    out(&text)?;
    Ok(())
}

fn table(id: &str, params: Vec<(&str, Option<String>)>, opts: &TableOpts) -> Result<()> {
    emit(&config(Some(id), params, opts)?)
}

fn s<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|x| x.to_string())
}

fn overlay(a: OverlayArgs) -> Result<()> {
    let (id, n_key) = match a.report {
        OverlayReport::Gain => ("overlay_spectral_gain", "sizes"),
        OverlayReport::Routing => ("overlay_routing", "sides"),
        OverlayReport::Crosstalk => ("overlay_crosstalk", "n"),
        OverlayReport::SparseDense => ("sparse_dense", "n_atoms"),
    };
    table(id, vec![(n_key, a.n), ("d0", s(a.d0)), ("layers", a.layers)], &a.table)
}

fn cayley(a: CayleyArgs) -> Result<()> {
    let kind = match a.family {
        FamilyArg::Qr => FamilyKind::Qr,
        FamilyArg::Margulis => FamilyKind::Margulis,
        FamilyArg::Random => FamilyKind::Random(a.family_seed),
    };
    let moduli = Some(a.n.clone());
    match a.report {
        CayleyReport::Spectrum => {
            let n: usize = a.n.trim().parse().context("--n must be a single modulus for the spectrum report")?;
            let f = GeneratorFamily::new(kind, n, a.degree)?;
            let sp = f.spectrum()?;
            let obj = json!({
                "family": f.name(),
                "n": n,
                "degree": a.degree,
                "generators": f.generators(),
                "lambda1": sp.lambda1,
                "lambda2": sp.lambda2,
                "lambdaN": sp.lambda_n,
                "lambda_star": sp.lambda_star,
                "beta": sp.beta,
                "ramanujan": sp.ramanujan,
                "diameter_bound": sp.diameter_bound,
            });
            out(&format!("{}\n", serde_json::to_string_pretty(&obj)?))?;
            Ok(())
        }
        CayleyReport::Barrier => table("cayley_families", vec![("moduli", moduli)], &a.table),
        CayleyReport::Affine => table("cayley_affine", vec![("moduli", moduli)], &a.table),
        CayleyReport::Qr => table("cayley_qr", vec![("moduli", moduli), ("degree", Some(a.degree.to_string()))], &a.table),
    }
}

fn tower(a: TowerArgs) -> Result<()> {
    match a.report {
        TowerReport::Depth => {
            if a.base != "fano" || a.k != 2 || a.levels != 3 {
                bail!("the depth report covers the three-level 2-fold Fano tower (--base fano --k 2 --levels 3)");
            }
            table("covering_tower", Vec::new(), &a.table)
        }
        TowerReport::Search => {
            let base = match a.base.as_str() {
                "fano" => build_projective_plane(2)?,
                "pg3" => build_projective_plane(3)?,
                other => bail!("unknown base '{other}' (fano, pg3)"),
            };
            let mode = match a.search {
                SearchArg::Exhaustive => SearchMode::Exhaustive,
                SearchArg::Sampled => SearchMode::Sample { m: a.samples, seed: a.table.seed.unwrap_or(0) },
            };
            let r = search_ramanujan_voltages(&base, a.k, mode, LiftConvention::default())?;
            let mut v: Value = serde_json::to_value(&r)?;
            v["base"] = json!(a.base);
            v["N"] = json!(base.num_vertices() * a.k);
            out(&format!("{}\n", serde_json::to_string_pretty(&v)?))?;
            Ok(())
        }
    }
}

fn entangle(a: EntangleArgs) -> Result<()> {
    let dent = s(a.dent);
    match a.report {
        EntangleReport::Crossover => table("entanglement_crossover", vec![("sides", s(a.n)), ("d_ent", dent)], &a.table),
        EntangleReport::Hybrid => table("hybrid_teleport", vec![("side", s(a.n)), ("d_ent", dent)], &a.table),
        EntangleReport::Teleport => {
            let configs = match (a.n, a.dent) {
                (Some(n), Some(d)) => Some(format!("{}:{d}", n * n)),
                (None, None) => None,
                _ => bail!("the teleport report needs both --n and --dent, or neither"),
            };
            table("teleport_depth", vec![("configs", configs)], &a.table)
        }
    }
}

fn adaptive(a: AdaptiveArgs) -> Result<()> {
    let (n, d) = (s(a.n), s(a.d));
    match a.report {
        AdaptiveReport::Stall => table("greedy_stall", vec![("sides", n), ("d", d)], &a.table),
        AdaptiveReport::Concentration => table("energy_concentration", vec![("sides", n), ("d", d)], &a.table),
        AdaptiveReport::Hybrid => table("hybrid_greedy", vec![("side", n), ("d", d)], &a.table),
        AdaptiveReport::Mw => {
            if a.d.is_some() {
                bail!("the mw report selects among fixed overlays; --d does not apply");
            }
            table("mw_selection", vec![("side", n)], &a.table)
        }
    }
}

fn verify_cmd(a: VerifyArgs) -> Result<ExitCode> {
    let known: Vec<usize> = CRITERIA.iter().map(|c| c.0).collect();
    if let Some(bad) = a.criteria.iter().find(|c| !known.contains(c)) {
        bail!("unknown criterion {bad}; valid numbers are 1 to {}", known.len());
    }
    let which = if a.criteria.is_empty() { known } else { a.criteria };
    let report = verify(a.seed, &Targets::default(), &which);
    out(&report.to_text(a.verbose))?;
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
