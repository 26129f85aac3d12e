//! Adaptive routing driven by displacement energy: greedy matching until
//! stall, a greedy-then-Valiant hybrid, and multiplicative-weights choice
//! among candidate overlays.

use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::graphs::{build_random_regular_graph, WeightedGraph};
use crate::rng::{derive_seed, random_permutation, substream};
use crate::route::{valiant_paths, validate_permutation, PathOracle, SigmaStrategy};
use crate::spectral::spectrum_auto;
use crate::stats::mean;

/// Distance used for the displacement `ρ`.
#[derive(Debug, Clone)]
pub enum DisplacementMetric {
    /// Manhattan distance on the `n × n` grid; vertex `v` is cell `(v / n, v % n)`.
    GridManhattan { n: usize },
    /// Hop distance in an overlay.
    OverlayBfs(Arc<PathOracle>),
}

impl DisplacementMetric {
    pub fn distance(&self, u: usize, v: usize) -> u64 {
        match self {
            Self::GridManhattan { n } => ((u / n).abs_diff(v / n) + (u % n).abs_diff(v % n)) as u64,
            Self::OverlayBfs(o) => o.distance(u, v) as u64,
        }
    }
}

/// Which metric a run uses; the overlay variant is built per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MetricKind {
    #[default]
    GridManhattan,
    OverlayBfs,
}

/// Atom positions against a target permutation, with `Φ = Σ ρ²` maintained
/// incrementally.
#[derive(Debug, Clone)]
pub struct DisplacementState {
    /// `positions[a]`: vertex holding atom `a`.
    pub positions: Vec<usize>,
    occupant: Vec<usize>,
    /// `targets[a] = π(a)`.
    pub targets: Vec<usize>,
    pub metric: DisplacementMetric,
    phi: u64,
}

impl DisplacementState {
    /// Atom `a` starts on vertex `a`.
    pub fn new(pi: &[usize], metric: DisplacementMetric) -> Result<Self> {
        validate_permutation(pi, pi.len())?;
        let mut s = Self { positions: (0..pi.len()).collect(), occupant: (0..pi.len()).collect(), targets: pi.to_vec(), metric, phi: 0 };
        s.phi = s.recompute_phi();
        Ok(s)
    }

    pub fn rho(&self, atom: usize) -> u64 {
        self.metric.distance(self.positions[atom], self.targets[atom])
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn recompute_phi(&self) -> u64 {
        (0..self.positions.len()).map(|a| self.rho(a).pow(2)).sum()
    }

    pub fn occupant(&self, v: usize) -> usize {
        self.occupant[v]
    }

    /// Energy released by swapping the atoms on `u` and `w`.
    pub fn swap_gain(&self, u: usize, w: usize) -> i64 {
        let (a, b) = (self.occupant[u], self.occupant[w]);
        let d = |x: usize, y: usize| self.metric.distance(x, y).pow(2) as i64;
        d(u, self.targets[a]) + d(w, self.targets[b]) - d(w, self.targets[a]) - d(u, self.targets[b])
    }

    /// Greedy matching by descending gain (ties by edge order), positive
    /// gains only, without applying it.
    pub fn greedy_matching(&self, overlay: &WeightedGraph) -> (Vec<(usize, usize)>, u64) {
        let mut edges: Vec<(i64, usize, usize)> = overlay
            .edges()
            .filter_map(|(u, w, _)| {
                let g = self.swap_gain(u, w);
                (g > 0).then_some((g, u, w))
            })
            .collect();
        // stable sort keeps edge order among equal gains
        edges.sort_by_key(|x| std::cmp::Reverse(x.0));
        let mut used = vec![false; self.positions.len()];
        let mut matching = Vec::new();
        let mut delta = 0u64;
        for (g, u, w) in edges {
            if !used[u] && !used[w] {
                used[u] = true;
                used[w] = true;
                matching.push((u, w));
                delta += g as u64;
            }
        }
        (matching, delta)
    }

    pub fn apply(&mut self, matching: &[(usize, usize)]) {
        for &(u, w) in matching {
            let gain = self.swap_gain(u, w);
            let (a, b) = (self.occupant[u], self.occupant[w]);
            self.occupant.swap(u, w);
            self.positions[a] = w;
            self.positions[b] = u;
            self.phi = (self.phi as i64 - gain) as u64;
        }
    }

    /// One greedy step: returns the applied matching and `ΔΦ ≥ 0`.
    pub fn greedy_matching_step(&mut self, overlay: &WeightedGraph) -> (Vec<(usize, usize)>, u64) {
        let (m, delta) = self.greedy_matching(overlay);
        self.apply(&m);
        (m, delta)
    }

    /// Permutation still to be routed: the atom on vertex `v` must reach
    /// `residual[v]`.
    pub fn residual(&self) -> Vec<usize> {
        (0..self.positions.len()).map(|v| self.targets[self.occupant[v]]).collect()
    }
}

/// Outcome of greedy matching run to its stall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyRun {
    pub t_stall: usize,
    /// `Φ_stall / Φ₀`; absent when `Φ₀ = 0`.
    pub stall_fraction: Option<f64>,
    /// Fractional reduction of the first step.
    pub step0_delta: Option<f64>,
    /// `Φ` before each step and after the last.
    pub history: Vec<u64>,
    /// Steps where `Φ` increased or the incremental and recomputed values
    /// disagreed.
    pub violations: usize,
}

fn random_instance(n: usize, d: usize, seed: u64) -> Result<(Vec<usize>, WeightedGraph)> {
    let n_atoms = n * n;
    let pi = random_permutation(n_atoms, &mut substream(seed, "greedy-pi", 0));
    let overlay = build_random_regular_graph(n_atoms, d, derive_seed(seed, "greedy-overlay", 0))?;
    Ok((pi, overlay))
}

fn metric_for(kind: MetricKind, n: usize, overlay: &WeightedGraph) -> Result<DisplacementMetric> {
    Ok(match kind {
        MetricKind::GridManhattan => DisplacementMetric::GridManhattan { n },
        MetricKind::OverlayBfs => DisplacementMetric::OverlayBfs(Arc::new(PathOracle::new(overlay)?)),
    })
}

/// Greedy steps on `overlay` until no swap releases energy.
pub fn greedy_until_stall(state: &mut DisplacementState, overlay: &WeightedGraph) -> GreedyRun {
    let phi0 = state.phi();
    let mut history = vec![phi0];
    let mut violations = 0;
    loop {
        let before = state.phi();
        let (m, delta) = state.greedy_matching_step(overlay);
        if m.is_empty() {
            break;
        }
        let after = state.phi();
        if after > before || after != state.recompute_phi() || before - after != delta {
            violations += 1;
        }
        history.push(after);
    }
    let t_stall = history.len() - 1;
    let frac = |x: u64| (phi0 > 0).then(|| x as f64 / phi0 as f64);
    GreedyRun {
        t_stall,
        stall_fraction: frac(state.phi()),
        step0_delta: if t_stall > 0 { frac(history[0] - history[1]) } else { frac(0) },
        history,
        violations,
    }
}

/// Greedy matching on a random `d`-regular overlay of the `n × n` grid for a
/// uniformly random permutation drawn from `seed`.
pub fn run_greedy_until_stall(n: usize, d: usize, seed: u64, metric: MetricKind) -> Result<GreedyRun> {
    let (pi, overlay) = random_instance(n, d, seed)?;
    let mut state = DisplacementState::new(&pi, metric_for(metric, n, &overlay)?)?;
    Ok(greedy_until_stall(&mut state, &overlay))
}

/// Seed-averaged greedy statistics for one grid size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyRow {
    pub n: usize,
    pub n_atoms: usize,
    pub step0_delta: f64,
    pub t_stall: f64,
    pub stall_fraction: f64,
    pub steps: usize,
    pub violations: usize,
}

pub fn greedy_table_row(n: usize, d: usize, trials: usize, seed: u64, metric: MetricKind) -> Result<GreedyRow> {
    if trials == 0 {
        return param("at least one trial is required");
    }
    let runs =
        (0..trials as u64).into_par_iter().map(|t| run_greedy_until_stall(n, d, derive_seed(seed, "greedy-trial", t), metric)).collect::<Result<Vec<_>>>()?;
    Ok(GreedyRow {
        n,
        n_atoms: n * n,
        step0_delta: mean(&runs.iter().filter_map(|r| r.step0_delta).collect::<Vec<_>>()),
        t_stall: mean(&runs.iter().map(|r| r.t_stall as f64).collect::<Vec<_>>()),
        stall_fraction: mean(&runs.iter().filter_map(|r| r.stall_fraction).collect::<Vec<_>>()),
        steps: runs.iter().map(|r| r.t_stall).sum(),
        violations: runs.iter().map(|r| r.violations).sum(),
    })
}

/// Empirical tail of the per-step energy release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Fraction of steps releasing less than half the mean release of steps
    /// at a similar energy level.
    pub alpha: f64,
    pub bins: usize,
    pub samples: usize,
    /// Greedy steps checked for monotonicity and their violations.
    pub steps: usize,
    pub violations: usize,
}

/// Minimum number of steps per energy bin.
pub const MIN_BIN_SAMPLES: usize = 5;

/// Pool greedy steps over `trials` runs, bin them by deciles of `Φ_t / Φ₀`
/// and count steps with `ΔΦ < ½ · mean(ΔΦ | bin)`. Bins are merged when they
/// would hold fewer than [`MIN_BIN_SAMPLES`] steps.
pub fn concentration_check(n: usize, d: usize, trials: usize, seed: u64) -> Result<ConcentrationReport> {
    if trials < 20 {
        return param("concentration check needs at least 20 trials");
    }
    let runs = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_greedy_until_stall(n, d, derive_seed(seed, "concentration-trial", t), MetricKind::GridManhattan))
        .collect::<Result<Vec<_>>>()?;
    // (Φ_t / Φ₀, ΔΦ_t / Φ₀) for every productive step
    let mut samples: Vec<(f64, f64)> = runs
        .iter()
        .flat_map(|r| {
            let phi0 = r.history[0].max(1) as f64;
            r.history.windows(2).map(move |w| (w[0] as f64 / phi0, (w[0] - w[1]) as f64 / phi0))
        })
        .collect();
    let mut report = tail_fraction(&mut samples, 10);
    report.steps = runs.iter().map(|r| r.t_stall).sum();
    report.violations = runs.iter().map(|r| r.violations).sum();
    Ok(report)
}

fn tail_fraction(samples: &mut [(f64, f64)], wanted_bins: usize) -> ConcentrationReport {
    let total = samples.len();
    if total == 0 {
        return ConcentrationReport { alpha: 0.0, bins: 0, samples: 0, steps: 0, violations: 0 };
    }
    let bins = wanted_bins.min(total / MIN_BIN_SAMPLES).max(1);
    if bins < wanted_bins {
        log::warn!("only {total} steps; using {bins} energy bins instead of {wanted_bins}");
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tail = 0;
    for b in 0..bins {
        let chunk = &samples[b * total / bins..(b + 1) * total / bins];
        let m = chunk.iter().map(|s| s.1).sum::<f64>() / chunk.len() as f64;
        tail += chunk.iter().filter(|s| s.1 < 0.5 * m).count();
    }
    ConcentrationReport { alpha: tail as f64 / total as f64, bins, samples: total, steps: 0, violations: 0 }
}

/// Greedy until stall followed by two-phase routing of what is left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridGreedy {
    pub n_atoms: usize,
    pub beta: f64,
    pub t_stall: usize,
    pub stall_fraction: f64,
    /// Congestion-plus-dilation estimate for the residual permutation.
    pub t_residual: usize,
    pub t_total: usize,
    /// Same estimate for routing the original permutation directly.
    pub t_pure: usize,
    pub speedup: f64,
    /// Energy-scaled accounting `T_stall + f · 2log₂N/(1−β)` against
    /// `2log₂N/(1−β)`, where `f` is the stall fraction.
    pub model_total: f64,
    pub model_pure: f64,
    pub model_speedup: f64,
}

pub fn hybrid_greedy_valiant(n: usize, d: usize, seed: u64) -> Result<HybridGreedy> {
    let (pi, overlay) = random_instance(n, d, seed)?;
    hybrid_on(&pi, &overlay, n, seed)
}

fn hybrid_on(pi: &[usize], overlay: &WeightedGraph, n: usize, seed: u64) -> Result<HybridGreedy> {
    let oracle = PathOracle::new(overlay)?;
    let beta = spectrum_auto(overlay)?.beta;
    let mut state = DisplacementState::new(pi, DisplacementMetric::GridManhattan { n })?;
    let run = greedy_until_stall(&mut state, overlay);
    let residual = state.residual();
    let est =
        |p: &[usize], label: &str| -> Result<usize> { Ok(valiant_paths(&oracle, p, &SigmaStrategy::Uniform, derive_seed(seed, label, 0))?.lmr_estimate()) };
    let t_residual = est(&residual, "hybrid-residual")?;
    let t_pure = est(pi, "hybrid-pure")?;
    let t_total = run.t_stall + t_residual;
    let n_atoms = pi.len();
    let stall_fraction = run.stall_fraction.unwrap_or(0.0);
    let model_pure = if beta < 1.0 { 2.0 * (n_atoms as f64).log2() / (1.0 - beta) } else { f64::INFINITY };
    let model_total = run.t_stall as f64 + stall_fraction * model_pure;
    Ok(HybridGreedy {
        n_atoms,
        beta,
        t_stall: run.t_stall,
        stall_fraction,
        t_residual,
        t_total,
        t_pure,
        speedup: if t_total == 0 { 1.0 } else { t_pure as f64 / t_total as f64 },
        model_total,
        model_pure,
        model_speedup: if model_total > 0.0 { model_pure / model_total } else { 1.0 },
    })
}

/// Candidate overlays on a shared vertex set with MW weights.
#[derive(Debug, Clone)]
pub struct OverlayFamily {
    pub names: Vec<String>,
    pub graphs: Vec<WeightedGraph>,
}

impl OverlayFamily {
    pub fn new(members: Vec<(String, WeightedGraph)>) -> Result<Self> {
        if members.is_empty() {
            return param("overlay family is empty");
        }
        let n = members[0].1.num_vertices();
        if members.iter().any(|m| m.1.num_vertices() != n) {
            return param("overlays must share the vertex set");
        }
        let (names, graphs) = members.into_iter().unzip();
        Ok(Self { names, graphs })
    }

    /// Random 4- and 8-regular overlays and the complete graph on `n_atoms`.
    pub fn standard(n_atoms: usize, seed: u64) -> Result<Self> {
        Self::new(vec![
            ("d=4".into(), build_random_regular_graph(n_atoms, 4, derive_seed(seed, "family", 4))?),
            ("d=8".into(), build_random_regular_graph(n_atoms, 8, derive_seed(seed, "family", 8))?),
            ("complete".into(), WeightedGraph::complete(n_atoms)),
        ])
    }

    pub fn num_vertices(&self) -> usize {
        self.graphs[0].num_vertices()
    }
}

/// Default MW learning rate.
pub const DEFAULT_ETA: f64 = 0.5;

/// Outcome of MW overlay selection on one permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwRun {
    pub t_mw: usize,
    /// Greedy steps of the MW phase, including steps whose sampled overlay
    /// released nothing.
    pub mw_steps: usize,
    /// Completion depth of each member used alone.
    pub t_single: Vec<usize>,
    pub t_best: usize,
    pub competitive_ratio: f64,
    pub final_weights: Vec<f64>,
    /// The overlay that routes what greedy leaves behind.
    pub finisher: usize,
    /// The greedy phase hit the step cap.
    pub capped: bool,
}

/// Step cap `⌈50 log₂N⌉`.
pub fn mw_step_cap(n_atoms: usize) -> usize {
    (50.0 * (n_atoms.max(2) as f64).log2()).ceil() as usize
}

/// Two-phase depth estimate for the permutation left in `state`.
fn residual_depth(oracle: &PathOracle, state: &DisplacementState, seed: u64) -> Result<usize> {
    if state.phi() == 0 {
        return Ok(0);
    }
    Ok(valiant_paths(oracle, &state.residual(), &SigmaStrategy::Uniform, derive_seed(seed, "mw-residual", 0))?.lmr_estimate())
}

/// Greedy matching stalls on every overlay before all atoms are placed, so
/// a run completes by routing the residual permutation with two-phase
/// routing; its depth is greedy steps plus that estimate.
///
/// Each MW step samples an overlay with probability proportional to its
/// weight, applies its greedy matching, and multiplies every weight by
/// `exp(η · r_i)` where `r_i = ΔΦ_i / Φ_t ∈ [0, 1]` is the release member `i`
/// would have achieved. The greedy phase ends when no member can release
/// energy or at the step cap; the highest-weight member then finishes.
/// Grid Manhattan displacement on an `n × n` grid.
pub fn mw_overlay_selection(family: &OverlayFamily, pi: &[usize], n: usize, eta: f64, seed: u64) -> Result<MwRun> {
    if n * n != family.num_vertices() {
        return param("grid side does not match the overlay size");
    }
    let cap = mw_step_cap(pi.len());
    let metric = DisplacementMetric::GridManhattan { n };
    let oracles = family.graphs.iter().map(PathOracle::new).collect::<Result<Vec<_>>>()?;
    let mut t_single = Vec::with_capacity(family.graphs.len());
    for (g, o) in family.graphs.iter().zip(&oracles) {
        let mut s = DisplacementState::new(pi, metric.clone())?;
        let mut steps = 0;
        while steps < cap && !s.greedy_matching_step(g).0.is_empty() {
            steps += 1;
        }
        t_single.push(steps + residual_depth(o, &s, seed)?);
    }
    let t_best = *t_single.iter().min().expect("nonempty family");

    let mut state = DisplacementState::new(pi, metric)?;
    let mut weights = vec![1.0 / family.graphs.len() as f64; family.graphs.len()];
    let mut rng = substream(seed, "mw", 0);
    let mut steps = 0;
    while state.phi() > 0 && steps < cap {
        let phi = state.phi() as f64;
        let options: Vec<(Vec<(usize, usize)>, u64)> = family.graphs.iter().map(|g| state.greedy_matching(g)).collect();
        if options.iter().all(|o| o.0.is_empty()) {
            break;
        }
        let mut x = rng.random::<f64>();
        let mut pick = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                pick = i;
                break;
            }
            x -= w;
        }
        state.apply(&options[pick].0);
        for (w, o) in weights.iter_mut().zip(&options) {
            *w *= (eta * (o.1 as f64 / phi).clamp(0.0, 1.0)).exp();
        }
        let norm: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= norm);
        steps += 1;
    }
    let finisher = (0..weights.len()).max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a))).expect("nonempty family");
    let t_mw = steps + residual_depth(&oracles[finisher], &state, seed)?;
    Ok(MwRun {
        t_mw,
        mw_steps: steps,
        competitive_ratio: if t_best == 0 { 1.0 } else { t_mw as f64 / t_best as f64 },
        t_single,
        t_best,
        final_weights: weights,
        finisher,
        capped: steps == cap,
    })
}

/// Mean competitive ratio over `trials` seeds on the standard family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwSummary {
    pub n_atoms: usize,
    pub mean_t_mw: f64,
    pub mean_t_best: f64,
    pub mean_cr: f64,
    pub min_cr: f64,
    pub max_cr: f64,
    pub capped: usize,
}

pub fn mw_experiment(n: usize, trials: usize, eta: f64, seed: u64) -> Result<MwSummary> {
    if trials == 0 {
        return param("at least one trial is required");
    }
    let runs = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, "mw-trial", t);
            let family = OverlayFamily::standard(n * n, s)?;
            let pi = random_permutation(n * n, &mut substream(s, "mw-pi", 0));
            mw_overlay_selection(&family, &pi, n, eta, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let crs: Vec<f64> = runs.iter().map(|r| r.competitive_ratio).collect();
    Ok(MwSummary {
        n_atoms: n * n,
        mean_t_mw: mean(&runs.iter().map(|r| r.t_mw as f64).collect::<Vec<_>>()),
        mean_t_best: mean(&runs.iter().map(|r| r.t_best as f64).collect::<Vec<_>>()),
        mean_cr: mean(&crs),
        min_cr: crs.iter().cloned().fold(f64::INFINITY, f64::min),
        max_cr: crs.iter().cloned().fold(0.0, f64::max),
        capped: runs.iter().filter(|r| r.capped).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placed_atoms_give_empty_matching() {
        let id: Vec<usize> = (0..16).collect();
        let g = build_random_regular_graph(16, 4, 1).unwrap();
        let mut s = DisplacementState::new(&id, DisplacementMetric::GridManhattan { n: 4 }).unwrap();
        let (m, d) = s.greedy_matching_step(&g);
        assert!(m.is_empty());
        assert_eq!(d, 0);
        let run = greedy_until_stall(&mut s, &g);
        assert_eq!(run.t_stall, 0);
        assert_eq!(run.stall_fraction, None);
    }

    #[test]
    fn forced_swap() {
        let pi = vec![1, 0, 2, 3];
        let g = WeightedGraph::cycle(4);
        let mut s = DisplacementState::new(&pi, DisplacementMetric::GridManhattan { n: 2 }).unwrap();
        assert_eq!(s.phi(), 2);
        let (m, d) = s.greedy_matching_step(&g);
        assert_eq!(m, vec![(0, 1)]);
        assert_eq!((d, s.phi()), (2, 0));
    }

    #[test]
    fn greedy_is_monotone() {
        for seed in 0..4 {
            for metric in [MetricKind::GridManhattan, MetricKind::OverlayBfs] {
                let r = run_greedy_until_stall(6, 8, seed, metric).unwrap();
                assert_eq!(r.violations, 0);
                assert!(r.history.windows(2).all(|w| w[1] < w[0]));
            }
        }
    }

    #[test]
    fn hybrid_identity_is_free() {
        let id: Vec<usize> = (0..16).collect();
        let g = build_random_regular_graph(16, 4, 2).unwrap();
        let h = hybrid_on(&id, &g, 4, 0).unwrap();
        assert_eq!((h.t_total, h.t_pure), (0, 0));
    }

    #[test]
    fn single_member_family_has_unit_ratio() {
        let family = OverlayFamily::new(vec![("complete".into(), WeightedGraph::complete(16))]).unwrap();
        let pi = random_permutation(16, &mut substream(3, "x", 0));
        let r = mw_overlay_selection(&family, &pi, 4, DEFAULT_ETA, 0).unwrap();
        assert_eq!(r.competitive_ratio, 1.0);
    }

    #[test]
    fn tail_fraction_bounds() {
        let mut same: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, 1.0)).collect();
        assert_eq!(tail_fraction(&mut same, 10).alpha, 0.0);
        let mut few = vec![(0.5, 1.0), (0.4, 0.0)];
        let r = tail_fraction(&mut few, 10);
        assert_eq!(r.bins, 1);
        assert!((0.0..=1.0).contains(&r.alpha));
    }
}
