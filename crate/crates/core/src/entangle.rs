//! Cost models for routing by teleportation over pre-shared Bell pairs:
//! overlay routing depth, pair distribution cost, amortised crossover and a
//! hybrid teleport/physical protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graphs::{build_random_regular_graph, WeightedGraph};
use crate::rng::{derive_seed, random_permutation, substream};
use crate::route::{random_permutations, sparse_lmr_estimate, subset_lmr_estimate, PathOracle, SigmaStrategy};
use crate::stats::median_usize;

/// Permutations per teleport depth estimate.
pub const TELEPORT_TRIALS: usize = 20;
/// Above this many vertices routing depth uses bidirectional search instead
/// of all-pairs path tables.
pub const ALL_PAIRS_LIMIT: usize = 16_384;
/// Default entanglement overlay degree.
pub const DEFAULT_D_ENT: usize = 16;

/// Parameters of Bell-pair distribution on an `n × n` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementConfig {
    pub n: usize,
    pub d_ent: usize,
    /// Pairs distributed in parallel per step.
    pub k: usize,
    /// Mean grid distance travelled by one pair.
    pub mean_pair_distance: f64,
}

impl EntanglementConfig {
    /// Defaults `k = N` and the exact mean Manhattan distance `2(n²−1)/(3n)`.
    pub fn new(n: usize, d_ent: usize) -> Result<Self> {
        Self::with(n, d_ent, n * n, mean_manhattan_distance(n))
    }

    pub fn with(n: usize, d_ent: usize, k: usize, mean_pair_distance: f64) -> Result<Self> {
        if n < 1 {
            return param("grid side must be positive");
        }
        if d_ent == 1 {
            return param("entanglement degree must be 0 or at least 2");
        }
        if k < 1 {
            return param("distribution parallelism k must be at least 1");
        }
        Ok(Self { n, d_ent, k, mean_pair_distance })
    }

    pub fn num_atoms(&self) -> usize {
        self.n * self.n
    }
}

/// Mean Manhattan distance between two independent uniform cells of an
/// `n × n` grid.
pub fn mean_manhattan_distance(n: usize) -> f64 {
    let n = n as f64;
    2.0 * (n * n - 1.0) / (3.0 * n)
}

/// `⌈(d_ent N / 2) · d̄ / k⌉` steps to distribute one pair per overlay edge.
pub fn distribution_cost(config: &EntanglementConfig) -> usize {
    let pairs = config.d_ent as f64 * config.num_atoms() as f64 / 2.0;
    let cost = pairs * config.mean_pair_distance / config.k as f64;
    // guard against representation noise just above an integer
    (cost - 1e-9).ceil().max(0.0) as usize
}

/// Physical grid routing baseline `⌈3n/2⌉`.
pub fn physical_depth(n: usize) -> usize {
    (3 * n).div_ceil(2)
}

/// Rounds after which teleportation amortises: `T_dist / (T_phys − T_route)`.
pub fn crossover_rounds(t_dist: usize, t_route: usize, t_phys: usize) -> Result<f64> {
    if t_phys <= t_route {
        return Err(Error::Domain(format!("teleport depth {t_route} is not below the physical depth {t_phys}; entanglement never pays")));
    }
    Ok(t_dist as f64 / (t_phys - t_route) as f64)
}

/// Amortised per-round cost `T_route + T_dist / R`.
pub fn amortized_cost(t_route: usize, t_dist: usize, rounds: usize) -> f64 {
    t_route as f64 + t_dist as f64 / rounds.max(1) as f64
}

/// Random `d_ent`-regular entanglement overlay on `n_atoms` vertices.
pub fn entanglement_overlay(n_atoms: usize, d_ent: usize, seed: u64) -> Result<WeightedGraph> {
    build_random_regular_graph(n_atoms, d_ent, derive_seed(seed, "ent-overlay", 0))
}

/// Median two-phase depth estimate over [`TELEPORT_TRIALS`] random
/// permutations on a random `d_ent`-regular overlay; teleporting along the
/// overlay takes as many steps as swapping along it.
pub fn teleport_route_depth(n_atoms: usize, d_ent: usize, seed: u64) -> Result<usize> {
    if n_atoms < 2 {
        return param("need at least two atoms");
    }
    if n_atoms == 2 {
        return Ok(1);
    }
    let g = entanglement_overlay(n_atoms, d_ent, seed)?;
    let perms = random_permutations(n_atoms, TELEPORT_TRIALS, derive_seed(seed, "ent-pi", 0));
    let depths = if n_atoms <= ALL_PAIRS_LIMIT {
        let oracle = PathOracle::new(&g)?;
        crate::route::depth_estimates(&oracle, &perms, &SigmaStrategy::Uniform, seed)?
    } else {
        perms.par_iter().enumerate().map(|(t, pi)| sparse_lmr_estimate(&g, pi, derive_seed(seed, "sigma", t as u64))).collect::<Result<Vec<_>>>()?
    };
    Ok(median_usize(&depths).ceil() as usize)
}

/// One row of the crossover table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub n_atoms: usize,
    pub t_route: usize,
    pub t_phys: usize,
    pub t_dist: usize,
    pub r_break: f64,
    /// `√N / log₂N`.
    pub naive: f64,
}

pub fn crossover_row(n: usize, d_ent: usize, seed: u64) -> Result<CrossoverRow> {
    let n_atoms = n * n;
    let t_route = teleport_route_depth(n_atoms, d_ent, seed)?;
    let t_phys = physical_depth(n);
    let t_dist = distribution_cost(&EntanglementConfig::new(n, d_ent)?);
    Ok(CrossoverRow {
        n_atoms,
        t_route,
        t_phys,
        t_dist,
        r_break: crossover_rounds(t_dist, t_route, t_phys)?,
        naive: (n_atoms as f64).sqrt() / (n_atoms as f64).log2(),
    })
}

/// Outcome of the hybrid teleport/physical protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridTeleport {
    pub n: usize,
    pub d_thresh: usize,
    pub fraction_teleported: f64,
    /// Two-phase depth estimate of the teleported subset on the overlay.
    pub t_teleport: usize,
    /// Congestion plus dilation of direct grid paths for the other movers.
    pub t_cleanup: usize,
    /// The two phases use disjoint resources and run concurrently.
    pub t_total: usize,
    pub t_phys: usize,
    pub speedup: f64,
}

/// Teleport atoms whose Manhattan displacement exceeds `d_thresh` over a
/// `d_ent`-regular overlay and move the rest along grid shortest paths, for
/// one uniformly random permutation of the `n × n` grid.
pub fn hybrid_teleport(n: usize, d_thresh: usize, d_ent: usize, seed: u64) -> Result<HybridTeleport> {
    if n < 2 {
        return param("grid side must be at least 2");
    }
    if d_thresh < 1 {
        return param("threshold must be at least 1");
    }
    let n_atoms = n * n;
    let pi = random_permutation(n_atoms, &mut substream(seed, "hybrid-pi", 0));
    let manhattan = |a: usize, b: usize| (a / n).abs_diff(b / n) + (a % n).abs_diff(b % n);
    let (far, near): (Vec<usize>, Vec<usize>) = (0..n_atoms).filter(|&v| pi[v] != v).partition(|&v| manhattan(v, pi[v]) > d_thresh);
    let t_teleport = if far.is_empty() {
        0
    } else {
        let overlay = PathOracle::new(&entanglement_overlay(n_atoms, d_ent, seed)?)?;
        subset_lmr_estimate(&overlay, &pi, &far, derive_seed(seed, "hybrid-sigma", 0))
    };
    let t_cleanup = if near.is_empty() {
        0
    } else {
        let grid = PathOracle::new(&grid_graph(n)?)?;
        let paths: Vec<Vec<usize>> = near.iter().map(|&v| grid.path(v, pi[v])).collect();
        crate::route::path_congestion(&paths, n_atoms) + paths.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    };
    let t_total = t_teleport.max(t_cleanup);
    let t_phys = physical_depth(n);
    Ok(HybridTeleport {
        n,
        d_thresh,
        fraction_teleported: far.len() as f64 / n_atoms as f64,
        t_teleport,
        t_cleanup,
        t_total,
        t_phys,
        speedup: t_phys as f64 / t_total.max(1) as f64,
    })
}

/// Nearest-neighbour `n × n` grid graph with open boundaries.
pub fn grid_graph(n: usize) -> Result<WeightedGraph> {
    let edges = (0..n * n).flat_map(|v| {
        let (r, c) = (v / n, v % n);
        let right = (c + 1 < n).then_some((v, v + 1, 1u32));
        let down = (r + 1 < n).then_some((v, v + n, 1u32));
        right.into_iter().chain(down)
    });
    WeightedGraph::from_edges(n * n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_costs() {
        let want = [(16, 86), (32, 171), (64, 342), (100, 534), (200, 1067)];
        for (n, t) in want {
            let got = distribution_cost(&EntanglementConfig::new(n, 16).unwrap());
            assert!(got.abs_diff(t) <= 1, "n={n}: {got} vs {t}");
        }
        assert_eq!(distribution_cost(&EntanglementConfig::new(16, 0).unwrap()), 0);
        let base = EntanglementConfig::with(16, 8, 64, 10.0).unwrap();
        assert_eq!(distribution_cost(&base), 160);
        assert_eq!(distribution_cost(&EntanglementConfig::with(16, 16, 64, 10.0).unwrap()), 320);
        assert_eq!(distribution_cost(&EntanglementConfig::with(16, 8, 128, 10.0).unwrap()), 80);
    }

    #[test]
    fn physical_baseline() {
        let want = [(16, 24), (32, 48), (64, 96), (100, 150), (200, 300)];
        for (n, t) in want {
            assert_eq!(physical_depth(n), t);
        }
    }

    #[test]
    fn crossover_identities() {
        assert!((crossover_rounds(86, 5, 24).unwrap() - 86.0 / 19.0).abs() < 1e-12);
        assert_eq!(crossover_rounds(10, 30, 40).unwrap(), 1.0);
        assert!(matches!(crossover_rounds(10, 40, 40), Err(Error::Domain(_))));
    }

    #[test]
    fn trivial_teleport() {
        assert_eq!(teleport_route_depth(2, 2, 0).unwrap(), 1);
    }

    #[test]
    fn hybrid_threshold_monotone() {
        let mut last = f64::INFINITY;
        for d in [1, 2, 4, 8, 16] {
            let h = hybrid_teleport(10, d, 8, 3).unwrap();
            assert!(h.fraction_teleported <= last);
            last = h.fraction_teleported;
        }
        let all_physical = hybrid_teleport(10, 20, 8, 3).unwrap();
        assert_eq!((all_physical.fraction_teleported, all_physical.t_teleport), (0.0, 0));
    }

    #[test]
    fn mean_distance_formula() {
        let n = 5usize;
        let mut total = 0usize;
        for a in 0..n * n {
            for b in 0..n * n {
                total += (a / n).abs_diff(b / n) + (a % n).abs_diff(b % n);
            }
        }
        assert!((total as f64 / (n * n * n * n) as f64 - mean_manhattan_distance(n)).abs() < 1e-12);
    }
}
