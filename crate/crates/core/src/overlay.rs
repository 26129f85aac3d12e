//! Capacity and depth models for emulating an expander overlay on grid
//! hardware with a bounded number of selective transfers per step.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::graphs::{build_grid_hypergraph, build_random_regular_graph, clique_expansion, union_layers, GridModel, GridSpec, WeightedGraph};
use crate::rng::derive_seed;
use crate::route::{depth_estimates, random_permutations, PathOracle, SigmaStrategy};
use crate::spectral::spectrum_auto;
use crate::stats::{mean, median_usize};

/// Hardware parameters of a multi-layer overlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayConfig {
    pub n: usize,
    /// Selective transfers per step and layer.
    pub k0: usize,
    pub layers: usize,
    /// Degree of each layer's overlay graph.
    pub d0: usize,
    /// Crosstalk coefficient between adjacent layers.
    pub gamma: f64,
}

impl OverlayConfig {
    pub fn new(n: usize, k0: usize, layers: usize, d0: usize, gamma: f64) -> Result<Self> {
        if k0 < 1 || layers < 1 {
            return param("k0 and the layer count must be at least 1");
        }
        if !(0.0..=1.0).contains(&gamma) {
            return param("crosstalk coefficient must lie in [0, 1]");
        }
        Ok(Self { n, k0, layers, d0, gamma })
    }

    pub fn effective_capacity(&self) -> EffectiveCapacity {
        effective_capacity(self.layers, self.k0, self.gamma)
    }
}

/// Depth of a `t_r`-step overlay routing when each matching (at most `n/2`
/// swaps) is split into sub-steps of `k` transfers.
pub fn overlay_depth(t_r: usize, n: usize, k: usize) -> usize {
    let k = k.max(1);
    t_r * n.div_ceil(2 * k).max(1)
}

/// Regimes of the capacity/depth trade-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapacityRegime {
    /// `k = Ω(N)`: depth `O(log N)`.
    Optimal,
    /// `k = Ω(N / log N)`: depth `O(log² N)`.
    NearOptimal,
    /// `k = Ω(√N)`: depth `O(√N log N)`.
    MatchesGrid,
    /// `k = O(1)`: depth `O(N log N)`.
    WorseThanGrid,
}

impl CapacityRegime {
    pub fn label(self) -> &'static str {
        match self {
            Self::Optimal => "Optimal, O(log N)",
            Self::NearOptimal => "Near-optimal, O(log^2 N)",
            Self::MatchesGrid => "Matches grid AOD, O(sqrt(N) log N)",
            Self::WorseThanGrid => "Worse than grid, O(N log N)",
        }
    }
}

/// Classify `k` against the thresholds `N/2`, `N/log₂N` and `√N`.
pub fn capacity_regime(k: usize, n: usize) -> CapacityRegime {
    let (k, nf) = (k as f64, n as f64);
    let log_n = nf.log2().max(1.0);
    if k >= nf / 2.0 {
        CapacityRegime::Optimal
    } else if k >= nf / log_n {
        CapacityRegime::NearOptimal
    } else if k >= nf.sqrt() {
        CapacityRegime::MatchesGrid
    } else {
        CapacityRegime::WorseThanGrid
    }
}

/// Effective per-step capacity of `L` layers under crosstalk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCapacity {
    /// `L k0 / (1 + 2γ(1 − 1/L))` with all layers active.
    pub direct: f64,
    /// `⌈L/2⌉ k0` with alternate layers active; only offered for `γ > 0.5`.
    pub checkerboard: Option<f64>,
    /// The better of the available patterns.
    pub value: f64,
}

pub fn effective_capacity(layers: usize, k0: usize, gamma: f64) -> EffectiveCapacity {
    let l = layers.max(1) as f64;
    let direct = l * k0 as f64 / (1.0 + 2.0 * gamma * (1.0 - 1.0 / l));
    let checkerboard = (gamma > 0.5).then(|| layers.div_ceil(2) as f64 * k0 as f64);
    EffectiveCapacity { direct, checkerboard, value: checkerboard.map_or(direct, |c| c.max(direct)) }
}

/// One row of the layer-union spectral experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilayerRow {
    pub layers: usize,
    pub mean_beta: f64,
    /// `β_L √L / β_1`; 1 under the `1/√L` law.
    pub beta_ratio: f64,
    /// Largest `λ₂` seen over the trials.
    pub max_lambda2: f64,
    /// `2√(L d0 − 1)`.
    pub ramanujan_bound: f64,
    /// Whether every trial's `λ₂` stayed below the bound.
    pub all_ramanujan: bool,
}

/// The union of `layers` independent random `d0`-regular graphs drawn for
/// `trial`.
pub fn layered_overlay(n: usize, d0: usize, layers: usize, seed: u64, trial: u64) -> Result<WeightedGraph> {
    let label = format!("layers/{layers}");
    let graphs = (0..layers as u64).map(|i| build_random_regular_graph(n, d0, derive_seed(seed, &label, trial * 1024 + i))).collect::<Result<Vec<_>>>()?;
    union_layers(&graphs)
}

/// Mean `β` of unions of `L` random `d0`-regular graphs, for each requested `L`.
pub fn multilayer_beta_experiment(n: usize, d0: usize, layer_counts: &[usize], trials: usize, seed: u64) -> Result<Vec<MultilayerRow>> {
    if trials == 0 {
        return param("at least one trial is required");
    }
    let mut rows: Vec<MultilayerRow> = Vec::new();
    for &layers in layer_counts {
        let bound = 2.0 * ((layers * d0) as f64 - 1.0).sqrt();
        let mut betas = Vec::with_capacity(trials);
        let mut max_l2 = f64::NEG_INFINITY;
        for t in 0..trials as u64 {
            let g = layered_overlay(n, d0, layers, seed, t)?;
            let s = spectrum_auto(&g)?;
            betas.push(s.beta);
            max_l2 = max_l2.max(s.lambda2);
        }
        rows.push(MultilayerRow {
            layers,
            mean_beta: mean(&betas),
            beta_ratio: f64::NAN,
            max_lambda2: max_l2,
            ramanujan_bound: bound,
            all_ramanujan: max_l2 <= bound + 1e-9,
        });
    }
    let base = rows.iter().find(|r| r.layers == 1).map(|r| r.mean_beta);
    for r in &mut rows {
        if let Some(b1) = base {
            r.beta_ratio = r.mean_beta * (r.layers as f64).sqrt() / b1;
        }
    }
    Ok(rows)
}

/// Routing depth of a layered overlay against the grid it is emulated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub n: usize,
    pub layers: usize,
    pub grid_beta: f64,
    pub overlay_beta: f64,
    /// Median congestion-plus-dilation depth on the grid clique expansion.
    pub grid_depth: f64,
    pub overlay_depth: f64,
    pub speedup: f64,
}

/// Median Valiant depth on the union of `layers` random `d0`-regular overlays
/// versus the 2D grid hypergraph's clique expansion, over the same `trials`
/// random permutations. `layers = 0` routes on the grid itself.
pub fn end_to_end_overlay_speedup(side: usize, layers: usize, d0: usize, trials: usize, seed: u64) -> Result<SpeedupReport> {
    let n = side * side;
    let grid = clique_expansion(&build_grid_hypergraph(&GridSpec::new(side, 3, GridModel::TwoD))?);
    let overlay = if layers == 0 { grid.clone() } else { layered_overlay(n, d0, layers, seed, 0)? };
    let perms = random_permutations(n, trials, derive_seed(seed, "speedup-pi", 0));
    let depth = |g: &WeightedGraph| -> Result<f64> {
        let oracle = PathOracle::new(g)?;
        Ok(median_usize(&depth_estimates(&oracle, &perms, &SigmaStrategy::Uniform, seed)?))
    };
    let grid_depth = depth(&grid)?;
    let overlay_depth = depth(&overlay)?;
    Ok(SpeedupReport {
        n,
        layers,
        grid_beta: spectrum_auto(&grid)?.beta,
        overlay_beta: spectrum_auto(&overlay)?.beta,
        grid_depth,
        overlay_depth,
        speedup: grid_depth / overlay_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_depth_formula() {
        assert_eq!(overlay_depth(10, 100, 10), 50);
        assert_eq!(overlay_depth(10, 100, 50), 10);
        assert_eq!(overlay_depth(10, 100, 500), 10);
        assert_eq!(overlay_depth(7, 100, 1), 350);
    }

    #[test]
    fn regimes() {
        assert_eq!(capacity_regime(512, 1024), CapacityRegime::Optimal);
        assert_eq!(capacity_regime(200, 1024), CapacityRegime::NearOptimal);
        assert_eq!(capacity_regime(32, 1024), CapacityRegime::MatchesGrid);
        assert_eq!(capacity_regime(1, 1024), CapacityRegime::WorseThanGrid);
    }

    #[test]
    fn crosstalk() {
        let c = effective_capacity(4, 32, 0.0);
        assert_eq!(c.direct, 128.0);
        assert_eq!(c.value, 128.0);
        let c = effective_capacity(4, 32, 0.6);
        assert!((c.direct - 128.0 / 1.9).abs() < 1e-12);
        assert_eq!(c.checkerboard, Some(64.0));
        assert!((c.value - 67.368).abs() < 1e-3);
        let big = effective_capacity(100_000, 1, 0.2);
        assert!((big.value / 100_000.0 - 1.0 / 1.4).abs() < 1e-4);
    }

    #[test]
    fn config_validation() {
        assert!(OverlayConfig::new(64, 0, 1, 8, 0.1).is_err());
        assert!(OverlayConfig::new(64, 1, 1, 8, 1.5).is_err());
        assert!(OverlayConfig::new(64, 8, 2, 8, 0.2).is_ok());
    }
}
