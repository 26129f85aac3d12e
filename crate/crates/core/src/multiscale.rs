//! Covering-tower routing over iterated voltage lifts and hierarchical block
//! routing on grids, with the tower depth prediction that links them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graphs::{build_random_regular_graph, clique_expansion, voltage_covering, Hypergraph, LiftConvention, VoltageAssignment, WeightedGraph};
use crate::rng::{derive_seed, substream};
use crate::route::{random_permutations, valiant_paths, validate_permutation, PathOracle, SigmaStrategy};
use crate::spectral::{check_ramanujan_graph, check_ramanujan_hypergraph, spectrum_auto};
use crate::stats::{median, median_usize};

/// How voltage assignments are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    /// Every assignment in `Z_k^E`; refused above [`MAX_EXHAUSTIVE`].
    Exhaustive,
    /// `m` assignments drawn uniformly.
    Sample { m: usize, seed: u64 },
}

/// Largest search space accepted in exhaustive mode.
pub const MAX_EXHAUSTIVE: u64 = 1_000_000;

/// Outcome of a voltage search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageSearch {
    pub k: usize,
    pub tested: usize,
    pub ramanujan: usize,
    pub fraction: f64,
    pub best_beta: f64,
    pub mean_beta: f64,
    pub best: Vec<usize>,
}

/// Fraction of `k`-fold voltage lifts of `base` that pass the hypergraph
/// Ramanujan test, with the lift of smallest `β`.
pub fn search_ramanujan_voltages(base: &Hypergraph, k: usize, mode: SearchMode, convention: LiftConvention) -> Result<VoltageSearch> {
    if k < 2 {
        return param("covering order k must be at least 2");
    }
    let e = base.num_hyperedges();
    let assignments: Vec<Vec<usize>> = match mode {
        SearchMode::Exhaustive => {
            let space = (k as u64).checked_pow(e as u32).filter(|&s| s <= MAX_EXHAUSTIVE);
            let Some(space) = space else {
                return param(format!("{k}^{e} assignments exceed the exhaustive limit of {MAX_EXHAUSTIVE}"));
            };
            (0..space)
                .map(|mut code| {
                    (0..e)
                        .map(|_| {
                            let s = (code % k as u64) as usize;
                            code /= k as u64;
                            s
                        })
                        .collect()
                })
                .collect()
        }
        SearchMode::Sample { m, seed } => {
            use rand::Rng as _;
            (0..m as u64)
                .map(|i| {
                    let mut rng = substream(seed, "voltages", i);
                    (0..e).map(|_| rng.random_range(0..k)).collect()
                })
                .collect()
        }
    };
    if assignments.is_empty() {
        return param("no assignments to test");
    }
    let scored = assignments
        .par_iter()
        .map(|v| {
            let lift = voltage_covering(&VoltageAssignment::new(base.clone(), k, v.clone(), convention)?);
            let s = spectrum_auto(&clique_expansion(&lift))?;
            Ok((check_ramanujan_hypergraph(&lift, &s)?, s.beta))
        })
        .collect::<Result<Vec<_>>>()?;
    let ramanujan = scored.iter().filter(|s| s.0).count();
    // first minimiser in enumeration order
    let (best_idx, best_beta) = scored.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, s)| if s.1 < acc.1 - 1e-12 { (i, s.1) } else { acc });
    Ok(VoltageSearch {
        k,
        tested: scored.len(),
        ramanujan,
        fraction: ramanujan as f64 / scored.len() as f64,
        best_beta,
        mean_beta: scored.iter().map(|s| s.1).sum::<f64>() / scored.len() as f64,
        best: assignments[best_idx].clone(),
    })
}

/// An iterated `k`-fold covering tower `H_0 ← H_1 ← … ← H_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerSpec {
    pub base: Hypergraph,
    pub k: usize,
    /// Voltages lifting level `ℓ` to level `ℓ + 1`.
    pub voltages: Vec<VoltageAssignment>,
    /// `levels[ℓ]` is `H_ℓ`; `levels[0]` is the base.
    pub levels: Vec<Hypergraph>,
    /// `β` of each level's clique expansion.
    pub betas: Vec<f64>,
    /// `sup_ℓ β(H_ℓ)`.
    pub beta_bar: f64,
}

impl TowerSpec {
    /// Lift `base` once per voltage vector; vector `ℓ` is indexed by the
    /// hyperedges of `H_ℓ`.
    pub fn new(base: Hypergraph, k: usize, voltages: Vec<Vec<usize>>, convention: LiftConvention) -> Result<Self> {
        let mut levels = vec![base.clone()];
        let mut assignments = Vec::with_capacity(voltages.len());
        for v in voltages {
            let va = VoltageAssignment::new(levels.last().expect("nonempty").clone(), k, v, convention)?;
            levels.push(voltage_covering(&va));
            assignments.push(va);
        }
        let betas = levels.iter().map(|h| Ok(spectrum_auto(&clique_expansion(h))?.beta)).collect::<Result<Vec<_>>>()?;
        let beta_bar = betas.iter().cloned().fold(0.0, f64::max);
        Ok(Self { base, k, voltages: assignments, levels, betas, beta_bar })
    }

    /// Fano plane with two 2-fold lifts: `β` runs 0.167, 0.500, 0.859.
    pub fn fano_example() -> Result<Self> {
        let fano = crate::graphs::build_projective_plane(2)?;
        let h2_mask = 12usize;
        let h2: Vec<usize> = (0..14).map(|i| (h2_mask >> i) & 1).collect();
        Self::new(fano, 2, vec![vec![1, 0, 1, 1, 0, 1, 1], h2], LiftConvention::FirstVertex)
    }

    /// Number of lifts `L`.
    pub fn num_lifts(&self) -> usize {
        self.voltages.len()
    }

    pub fn level_size(&self, level: usize) -> usize {
        self.levels[level].num_vertices()
    }

    pub fn top_size(&self) -> usize {
        self.level_size(self.num_lifts())
    }

    fn oracles(&self) -> Result<Vec<PathOracle>> {
        self.levels.iter().map(|h| PathOracle::new(&clique_expansion(h))).collect()
    }
}

/// `(L log₂k + log₂N₀) / (1 − β̄)`.
pub fn tower_prediction(levels: usize, k: usize, n0: f64, beta_bar: f64) -> Result<f64> {
    if beta_bar.is_nan() || beta_bar >= 1.0 {
        return Err(Error::Domain(format!("tower prediction needs beta_bar < 1, got {beta_bar}")));
    }
    if k < 1 || n0 <= 0.0 {
        return param("k must be positive and N0 positive");
    }
    Ok((levels as f64 * (k as f64).log2() + n0.log2()) / (1.0 - beta_bar))
}

/// One level of the tower depth table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerRow {
    pub level: usize,
    pub n: usize,
    pub beta: f64,
    pub t_med: f64,
    pub t_over_log: f64,
}

/// Median Valiant depth estimate on each level over `trials` random
/// permutations.
pub fn tower_depth_table(spec: &TowerSpec, trials: usize, seed: u64) -> Result<Vec<TowerRow>> {
    let oracles = spec.oracles()?;
    oracles
        .iter()
        .enumerate()
        .map(|(level, oracle)| {
            let n = oracle.num_vertices();
            let perms = random_permutations(n, trials, derive_seed(seed, "tower-pi", level as u64));
            let depths = crate::route::depth_estimates(oracle, &perms, &SigmaStrategy::Uniform, derive_seed(seed, "tower-sigma", level as u64))?;
            let t_med = median_usize(&depths);
            Ok(TowerRow { level, n, beta: spec.betas[level], t_med, t_over_log: t_med / (n as f64).log2() })
        })
        .collect()
}

/// Recursive tower routing of one permutation of the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerRouting {
    /// Depth charged at each level: level 0 routes the projected lanes, level
    /// `ℓ ≥ 1` the fiber-preserving residual of its lift.
    pub level_depths: Vec<usize>,
    pub total: usize,
    pub t_over_log: f64,
    /// Fraction of top-level atoms whose target lies in another fiber.
    pub cross_fiber_fraction: f64,
    /// Every lane and landing map was a bijection and the composition equals π.
    pub realized: bool,
}

/// Expected cross-fiber fraction `1 − 1/N_{L−1}` of a uniform permutation of
/// the top level.
pub fn expected_cross_fiber_fraction(spec: &TowerSpec) -> Result<f64> {
    if spec.num_lifts() == 0 {
        return param("tower has no lifts");
    }
    let n = spec.level_size(spec.num_lifts() - 1) as f64;
    Ok(1.0 - 1.0 / n)
}

/// Route `pi` on the top level by splitting it into `k` cross-fiber lanes,
/// routed recursively one level down, and a fiber-preserving residual routed
/// on the level itself. Lanes run in parallel, so per-level depths combine by
/// maximum across lanes and add across levels.
pub fn tower_route(spec: &TowerSpec, pi: &[usize], seed: u64) -> Result<TowerRouting> {
    let top = spec.num_lifts();
    validate_permutation(pi, spec.top_size())?;
    let oracles = spec.oracles()?;
    let cross = if top == 0 {
        0.0
    } else {
        let n = spec.level_size(top - 1);
        pi.iter().enumerate().filter(|&(x, &y)| x % n != y % n).count() as f64 / pi.len() as f64
    };
    let (level_depths, realized) = tower_cost(spec, &oracles, top, pi, seed)?;
    let total: usize = level_depths.iter().sum();
    Ok(TowerRouting { total, t_over_log: total as f64 / (pi.len() as f64).log2(), level_depths, cross_fiber_fraction: cross, realized })
}

fn tower_cost(spec: &TowerSpec, oracles: &[PathOracle], level: usize, pi: &[usize], seed: u64) -> Result<(Vec<usize>, bool)> {
    let depth = |pi: &[usize], seed: u64| -> Result<usize> { Ok(valiant_paths(&oracles[level], pi, &SigmaStrategy::Uniform, seed)?.lmr_estimate()) };
    if level == 0 {
        return Ok((vec![depth(pi, seed)?], true));
    }
    let (n, k) = (spec.level_size(level - 1), spec.k);
    // fiber v holds atoms j*n + v; lanes are perfect matchings of the fiber demand
    let demand: Vec<Vec<usize>> = (0..n).map(|v| (0..k).map(|j| pi[j * n + v] % n).collect()).collect();
    let colours = regular_bipartite_decomposition(&demand)?;
    let mut lanes = vec![vec![usize::MAX; n]; k];
    let mut weight = vec![vec![0usize; k]; k];
    for v in 0..n {
        for j in 0..k {
            let c = colours[v][j];
            lanes[c][v] = demand[v][j];
            weight[c][pi[j * n + v] / n] += 1;
        }
    }
    // each lane lands on the sheet most of its atoms are headed for
    let sheet_of = best_assignment(&weight);
    let mut landing = vec![0usize; n * k];
    for v in 0..n {
        for j in 0..k {
            let x = j * n + v;
            landing[x] = sheet_of[colours[v][j]] * n + pi[x] % n;
        }
    }
    let mut residual = vec![usize::MAX; n * k];
    for x in 0..n * k {
        residual[landing[x]] = pi[x];
    }
    let mut realized = !residual.contains(&usize::MAX) && (0..n * k).all(|x| residual[landing[x]] == pi[x]);
    let mut below = vec![0usize; level];
    for (c, lane) in lanes.iter().enumerate() {
        let (d, ok) = tower_cost(spec, oracles, level - 1, lane, derive_seed(seed, "lane", c as u64))?;
        realized &= ok;
        for (b, d) in below.iter_mut().zip(d) {
            *b = (*b).max(d);
        }
    }
    below.push(depth(&residual, derive_seed(seed, "residual", level as u64))?);
    Ok((below, realized))
}

/// Bijection rows→columns maximising the summed weight; exact for small `k`.
fn best_assignment(w: &[Vec<usize>]) -> Vec<usize> {
    let k = w.len();
    if k <= 8 {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = (0, perm.clone());
        permute(&mut perm, 0, &mut |p| {
            let s: usize = p.iter().enumerate().map(|(i, &j)| w[i][j]).sum();
            if s > best.0 {
                best = (s, p.to_vec());
            }
        });
        if best.0 > 0 {
            return best.1;
        }
        return (0..k).collect();
    }
    let mut taken = vec![false; k];
    (0..k)
        .map(|i| {
            let j = (0..k).filter(|&j| !taken[j]).max_by_key(|&j| (w[i][j], std::cmp::Reverse(j))).expect("free column");
            taken[j] = true;
            j
        })
        .collect()
}

fn permute(p: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, f);
        p.swap(i, j);
    }
}

/// Split a `k`-regular bipartite multigraph into `k` perfect matchings.
///
/// `demand[u]` lists the right endpoints of the `k` edges at left vertex `u`;
/// the result gives each edge's matching index.
pub fn regular_bipartite_decomposition(demand: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let m = demand.len();
    let k = demand.first().map_or(0, Vec::len);
    let mut indeg = vec![0usize; m];
    for row in demand {
        if row.len() != k {
            return param("demand is not regular on the left");
        }
        for &r in row {
            if r >= m {
                return param("demand target out of range");
            }
            indeg[r] += 1;
        }
    }
    if indeg.iter().any(|&d| d != k) {
        return param("demand is not regular on the right");
    }
    let mut colour = vec![vec![usize::MAX; k]; m];
    for c in 0..k {
        // Kuhn's augmenting paths over the uncoloured edges
        let mut match_r: Vec<Option<(usize, usize)>> = vec![None; m];
        for u in 0..m {
            let mut seen = vec![false; m];
            if !augment(u, demand, &colour, &mut match_r, &mut seen) {
                return Err(Error::Construction("regular bipartite graph without perfect matching".into()));
            }
        }
        for (u, j) in match_r.into_iter().flatten() {
            colour[u][j] = c;
        }
    }
    Ok(colour)
}

fn augment(u: usize, demand: &[Vec<usize>], colour: &[Vec<usize>], match_r: &mut [Option<(usize, usize)>], seen: &mut [bool]) -> bool {
    for (j, &r) in demand[u].iter().enumerate() {
        if colour[u][j] != usize::MAX || seen[r] {
            continue;
        }
        seen[r] = true;
        let free = match match_r[r] {
            None => true,
            Some((u2, _)) => augment(u2, demand, colour, match_r, seen),
        };
        if free {
            match_r[r] = Some((u, j));
            return true;
        }
    }
    false
}

/// Block hierarchy over an `n × n` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchySpec {
    pub n: usize,
    pub b: usize,
    /// `⌈log_b n⌉`.
    pub levels: usize,
    /// Overlay degree per level `ℓ = 1..=L` (index `ℓ − 1`); unused where a
    /// level has a single block.
    pub degrees: Vec<usize>,
}

/// Degree of the flat comparison overlay.
pub const FLAT_DEGREE: usize = 8;

/// Default overlay degree on `blocks` vertices: `⌈log₂ blocks⌉` clamped to
/// `[3, 8]`, below the vertex count and with an even stub total.
pub fn default_level_degree(blocks: usize) -> usize {
    if blocks < 2 {
        return 0;
    }
    let mut d = ((blocks as f64).log2().ceil() as usize).clamp(3, FLAT_DEGREE).min(blocks - 1);
    if (blocks * d) % 2 == 1 {
        d -= 1;
    }
    d
}

impl HierarchySpec {
    pub fn new(n: usize, b: usize) -> Result<Self> {
        if b < 2 {
            return param("block size b must be at least 2");
        }
        if n < 2 {
            return param("grid side must be at least 2");
        }
        let mut levels = 0;
        let mut side = 1usize;
        while side < n {
            side *= b;
            levels += 1;
            if side < n && !n.is_multiple_of(side) {
                return param(format!("block side {side} does not divide the grid side {n}"));
            }
        }
        if b <= n && !n.is_multiple_of(b) {
            return param(format!("block size {b} does not divide the grid side {n}"));
        }
        let degrees = (1..=levels).map(|l| default_level_degree(Self::blocks_at(n, b, l))).collect();
        Ok(Self { n, b, levels, degrees })
    }

    fn blocks_at(n: usize, b: usize, level: usize) -> usize {
        let side = b.pow(level as u32);
        if side >= n {
            1
        } else {
            (n / side).pow(2)
        }
    }

    /// Blocks at level `ℓ` (side `b^ℓ`).
    pub fn blocks(&self, level: usize) -> usize {
        Self::blocks_at(self.n, self.b, level)
    }

    pub fn block_side(&self, level: usize) -> usize {
        self.b.pow(level as u32).min(self.n)
    }

    /// Atoms moved per step when every overlay edge swaps two whole blocks:
    /// `(blocks/2) · b^{2ℓ}`, equal to `N/2` at every level.
    pub fn full_block_swap_capacity(&self, level: usize) -> f64 {
        let side = self.block_side(level) as f64;
        self.blocks(level) as f64 / 2.0 * side * side
    }

    fn block_of(&self, cell: usize, level: usize) -> usize {
        let side = self.block_side(level);
        let (r, c) = (cell / self.n, cell % self.n);
        (r / side) * (self.n / side) + c / side
    }
}

/// `√N log₂N`, the boundary-transfer capacity scale.
pub fn boundary_capacity(n: usize) -> f64 {
    let n = n as f64;
    n.sqrt() * n.log2()
}

/// Two-phase Valiant depth bound `2 log₂m / (1 − β)` on an `m`-vertex
/// overlay; the depth unit of the hierarchy tables.
pub fn valiant_depth_bound(m: usize, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta >= 1.0 {
        return Err(Error::Domain(format!("depth bound needs beta < 1, got {beta}")));
    }
    Ok(2.0 * (m as f64).log2() / (1.0 - beta))
}

/// Random `d`-regular Ramanujan overlay, resampled until it passes.
pub fn ramanujan_overlay(m: usize, d: usize, seed: u64, label: &str) -> Result<(WeightedGraph, f64)> {
    for attempt in 0..200 {
        let g = build_random_regular_graph(m, d, derive_seed(seed, label, attempt))?;
        let s = spectrum_auto(&g)?;
        if s.beta < 1.0 && check_ramanujan_graph(d as f64, &s) {
            return Ok((g, s.beta));
        }
    }
    Err(Error::Construction(format!("no Ramanujan {d}-regular overlay on {m} vertices in 200 draws")))
}

/// One inter-block level of a hierarchical routing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub blocks: usize,
    pub degree: usize,
    pub beta: f64,
    /// `valiant_depth_bound(blocks, beta)`.
    pub depth: f64,
    /// Largest congestion-plus-dilation estimate over the parallel lanes.
    pub lane_depth: usize,
}

/// Outcome of one hierarchical routing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyRouting {
    pub levels: Vec<LevelReport>,
    /// Row-column sort depth inside the finest blocks, run in parallel.
    pub local_depth: usize,
    /// Sum of the level depths.
    pub total: f64,
    pub total_with_local: f64,
    pub flat_beta: f64,
    pub flat_depth: f64,
    pub ratio: f64,
    /// Congestion-plus-dilation estimate of flat Valiant routing of `pi`.
    pub flat_lane_depth: usize,
    pub realized: bool,
}

/// Route `pi` on the `n × n` grid block level by block level, coarse to fine.
///
/// At each level the atoms' block-to-block demand is split into `b^{2ℓ}`
/// parallel lanes (block permutations) routed by Valiant paths on a random
/// Ramanujan overlay of the blocks; atoms then sit in their target finest
/// blocks and a three-phase row-column sort places them. A hierarchy with no
/// multi-block level is the flat overlay itself.
pub fn hierarchical_route(spec: &HierarchySpec, pi: &[usize], seed: u64) -> Result<HierarchyRouting> {
    let n_cells = spec.n * spec.n;
    validate_permutation(pi, n_cells)?;
    let (flat, flat_beta) = ramanujan_overlay(n_cells, FLAT_DEGREE.min(n_cells - 1), seed, "flat-overlay")?;
    let flat_depth = valiant_depth_bound(n_cells, flat_beta)?;
    let flat_oracle = PathOracle::new(&flat)?;
    let flat_lane_depth = valiant_paths(&flat_oracle, pi, &SigmaStrategy::Uniform, derive_seed(seed, "flat-sigma", 0))?.lmr_estimate();

    let multi: Vec<usize> = (1..=spec.levels).rev().filter(|&l| spec.blocks(l) >= 2).collect();
    if multi.is_empty() {
        return Ok(HierarchyRouting {
            levels: vec![LevelReport {
                level: 0,
                blocks: n_cells,
                degree: FLAT_DEGREE.min(n_cells - 1),
                beta: flat_beta,
                depth: flat_depth,
                lane_depth: flat_lane_depth,
            }],
            local_depth: 0,
            total: flat_depth,
            total_with_local: flat_depth,
            flat_beta,
            flat_depth,
            ratio: 1.0,
            flat_lane_depth,
            realized: true,
        });
    }

    // pos[a]: current cell of atom a (atom a starts at cell a, targets pi[a])
    let mut pos: Vec<usize> = (0..n_cells).collect();
    let mut realized = true;
    let mut reports = Vec::with_capacity(multi.len());
    for &level in &multi {
        let blocks = spec.blocks(level);
        let side = spec.block_side(level);
        let per_block = side * side;
        let degree = spec.degrees[level - 1];
        let (overlay, beta) = ramanujan_overlay(blocks, degree, derive_seed(seed, "level-overlay", level as u64), "overlay")?;
        let oracle = PathOracle::new(&overlay)?;
        // atoms of each block in slot order
        let mut members = vec![Vec::with_capacity(per_block); blocks];
        let mut by_cell = vec![0usize; n_cells];
        for (a, &p) in pos.iter().enumerate() {
            by_cell[p] = a;
        }
        for cell in 0..n_cells {
            members[spec.block_of(cell, level)].push(by_cell[cell]);
        }
        let demand: Vec<Vec<usize>> = members.iter().map(|atoms| atoms.iter().map(|&a| spec.block_of(pi[a], level)).collect()).collect();
        let colours = regular_bipartite_decomposition(&demand)?;
        let mut lanes = vec![vec![usize::MAX; blocks]; per_block];
        for (blk, atoms) in members.iter().enumerate() {
            for (j, _) in atoms.iter().enumerate() {
                lanes[colours[blk][j]][blk] = demand[blk][j];
            }
        }
        let lane_depth = lanes
            .par_iter()
            .enumerate()
            .map(|(c, lane)| {
                if lane.contains(&usize::MAX) {
                    return Err(Error::Construction("lane is not a permutation".into()));
                }
                Ok(valiant_paths(&oracle, lane, &SigmaStrategy::Uniform, derive_seed(seed, &format!("lane/{level}"), c as u64))?.lmr_estimate())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        // lane c lands in slot c of its target block
        let cols = spec.n / side;
        for (blk, atoms) in members.iter().enumerate() {
            for (j, &a) in atoms.iter().enumerate() {
                let (target, slot) = (demand[blk][j], colours[blk][j]);
                let (br, bc) = (target / cols, target % cols);
                pos[a] = (br * side + slot / side) * spec.n + bc * side + slot % side;
            }
        }
        realized &= is_permutation(&pos);
        reports.push(LevelReport { level, blocks, degree, beta, depth: valiant_depth_bound(blocks, beta)?, lane_depth });
    }
    let local_depth = row_column_sort(spec, &mut pos, pi)?;
    realized &= pos == pi;
    let total: f64 = reports.iter().map(|r| r.depth).sum();
    Ok(HierarchyRouting {
        levels: reports,
        local_depth,
        total,
        total_with_local: total + local_depth as f64,
        flat_beta,
        flat_depth,
        ratio: total / flat_depth,
        flat_lane_depth,
        realized,
    })
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

/// Place every atom on its target cell inside its finest block with three
/// odd-even transposition phases (rows, columns, rows); returns the depth.
fn row_column_sort(spec: &HierarchySpec, pos: &mut [usize], pi: &[usize]) -> Result<usize> {
    let (n, b) = (spec.n, spec.b.min(spec.n));
    let mut at = vec![0usize; n * n];
    for (a, &p) in pos.iter().enumerate() {
        at[p] = a;
    }
    let local = |cell: usize| ((cell / n) % b, (cell % n) % b);
    // phase 1 column choice: each column of a block receives distinct target rows
    let mut key = vec![0usize; n * n];
    for br in (0..n).step_by(b) {
        for bc in (0..n).step_by(b) {
            let cells: Vec<Vec<usize>> = (0..b).map(|r| (0..b).map(|c| (br + r) * n + bc + c).collect()).collect();
            let demand: Vec<Vec<usize>> = cells.iter().map(|row| row.iter().map(|&cell| local(pi[at[cell]]).0).collect()).collect();
            let colours = regular_bipartite_decomposition(&demand)?;
            for (r, row) in cells.iter().enumerate() {
                for (c, &cell) in row.iter().enumerate() {
                    key[at[cell]] = colours[r][c];
                }
            }
        }
    }
    let rows = |at: &mut Vec<usize>, key: &dyn Fn(usize) -> usize| -> usize {
        (0..n)
            .flat_map(|r| (0..n).step_by(b).map(move |bc| (r, bc)))
            .map(|(r, bc)| {
                let line: Vec<usize> = (0..b).map(|c| r * n + bc + c).collect();
                odd_even_sort(at, &line, key)
            })
            .max()
            .unwrap_or(0)
    };
    let cols = |at: &mut Vec<usize>, key: &dyn Fn(usize) -> usize| -> usize {
        (0..n)
            .flat_map(|c| (0..n).step_by(b).map(move |br| (c, br)))
            .map(|(c, br)| {
                let line: Vec<usize> = (0..b).map(|r| (br + r) * n + c).collect();
                odd_even_sort(at, &line, key)
            })
            .max()
            .unwrap_or(0)
    };
    let d1 = rows(&mut at, &|a| key[a]);
    let d2 = cols(&mut at, &|a| local(pi[a]).0);
    let d3 = rows(&mut at, &|a| local(pi[a]).1);
    for (cell, &a) in at.iter().enumerate() {
        pos[a] = cell;
    }
    Ok(d1 + d2 + d3)
}

/// Odd-even transposition sort of the atoms on `line` by `key`; returns the
/// index of the last round that swapped (rounds alternate parity).
fn odd_even_sort(at: &mut [usize], line: &[usize], key: &dyn Fn(usize) -> usize) -> usize {
    let mut last = 0;
    for round in 0..line.len() {
        let mut swapped = false;
        for i in (round % 2..line.len().saturating_sub(1)).step_by(2) {
            let (x, y) = (line[i], line[i + 1]);
            if key(at[x]) > key(at[y]) {
                at.swap(x, y);
                swapped = true;
            }
        }
        if swapped {
            last = round + 1;
        }
    }
    last
}

/// One row of the hierarchical-versus-flat table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyRow {
    pub n: usize,
    pub b: usize,
    pub levels: usize,
    /// Median total over trials.
    pub t_hier: f64,
    pub t_flat: f64,
    pub ratio: f64,
    /// Tower prediction with `k = b²`, `N₀ = N / b^{2L}` and `β̄` the largest
    /// per-level median `β`.
    pub t_tower: f64,
    /// `|T_hier − T_tower| / T_tower`.
    pub tower_gap: f64,
    pub local_depth: f64,
    pub all_realized: bool,
}

pub fn hierarchy_experiment(n: usize, b: usize, trials: usize, seed: u64) -> Result<HierarchyRow> {
    if trials == 0 {
        return param("at least one trial is required");
    }
    let spec = HierarchySpec::new(n, b)?;
    let perms = random_permutations(n * n, trials, derive_seed(seed, "hier-pi", 0));
    let runs = perms.iter().enumerate().map(|(t, pi)| hierarchical_route(&spec, pi, derive_seed(seed, "hier-trial", t as u64))).collect::<Result<Vec<_>>>()?;
    let t_hier = median(&runs.iter().map(|r| r.total).collect::<Vec<_>>());
    let t_flat = median(&runs.iter().map(|r| r.flat_depth).collect::<Vec<_>>());
    let level_count = runs[0].levels.len();
    let beta_bar = (0..level_count).map(|i| median(&runs.iter().map(|r| r.levels[i].beta).collect::<Vec<_>>())).fold(0.0, f64::max);
    let n_cells = (n * n) as f64;
    let n0 = n_cells / (b as f64).powi(2 * spec.levels as i32);
    let t_tower = tower_prediction(spec.levels, b * b, n0, beta_bar)?;
    Ok(HierarchyRow {
        n,
        b,
        levels: spec.levels,
        t_hier,
        t_flat,
        ratio: t_hier / t_flat,
        t_tower,
        tower_gap: (t_hier - t_tower).abs() / t_tower,
        local_depth: median(&runs.iter().map(|r| r.local_depth as f64).collect::<Vec<_>>()),
        all_realized: runs.iter().all(|r| r.realized),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::build_projective_plane;

    #[test]
    fn fano_two_fold_exhaustive() {
        let fano = build_projective_plane(2).unwrap();
        let s = search_ramanujan_voltages(&fano, 2, SearchMode::Exhaustive, LiftConvention::FirstVertex).unwrap();
        assert_eq!((s.tested, s.ramanujan), (128, 120));
        assert!((s.best_beta - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exhaustive_limit() {
        let fano = build_projective_plane(2).unwrap();
        assert!(search_ramanujan_voltages(&fano, 8, SearchMode::Exhaustive, LiftConvention::FirstVertex).is_err());
    }

    #[test]
    fn zero_voltage_lift_is_not_ramanujan() {
        let fano = build_projective_plane(2).unwrap();
        let lift = voltage_covering(&VoltageAssignment::new(fano, 2, vec![0; 7], LiftConvention::FirstVertex).unwrap());
        let s = spectrum_auto(&clique_expansion(&lift)).unwrap();
        assert!(!check_ramanujan_hypergraph(&lift, &s).unwrap());
    }

    #[test]
    fn prediction_formula() {
        assert!((tower_prediction(1, 2, 2.0, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(tower_prediction(1, 2, 2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn example_tower_betas() {
        let t = TowerSpec::fano_example().unwrap();
        let want = [1.0 / 6.0, 0.5, 0.859];
        for (b, w) in t.betas.iter().zip(want) {
            assert!((b - w).abs() < 0.03, "{b} vs {w}");
        }
        assert_eq!(t.top_size(), 28);
    }

    #[test]
    fn tower_route_realizes() {
        let t = TowerSpec::fano_example().unwrap();
        for pi in random_permutations(28, 10, 4) {
            let r = tower_route(&t, &pi, 1).unwrap();
            assert!(r.realized);
            assert_eq!(r.level_depths.len(), 3);
        }
        let id: Vec<usize> = (0..28).collect();
        assert_eq!(tower_route(&t, &id, 0).unwrap().total, 0);
    }

    #[test]
    fn decomposition_gives_matchings() {
        let demand = vec![vec![0, 1, 1], vec![2, 0, 2], vec![1, 2, 0]];
        let c = regular_bipartite_decomposition(&demand).unwrap();
        for colour in 0..3 {
            let mut hit = [false; 3];
            for u in 0..3 {
                let j = c[u].iter().position(|&x| x == colour).unwrap();
                assert!(!std::mem::replace(&mut hit[demand[u][j]], true));
            }
        }
        assert!(regular_bipartite_decomposition(&[vec![0, 0], vec![0, 1]]).is_err());
    }

    #[test]
    fn hierarchy_validation_and_capacity() {
        assert!(HierarchySpec::new(12, 5).is_err());
        assert!(HierarchySpec::new(12, 8).is_err());
        let s = HierarchySpec::new(32, 4).unwrap();
        assert_eq!(s.levels, 3);
        for l in 1..=2 {
            assert_eq!(s.full_block_swap_capacity(l), 512.0);
        }
        assert_eq!(HierarchySpec::new(64, 8).unwrap().levels, 2);
    }

    #[test]
    fn hierarchy_realizes() {
        let spec = HierarchySpec::new(8, 2).unwrap();
        for (t, pi) in random_permutations(64, 3, 2).iter().enumerate() {
            let r = hierarchical_route(&spec, pi, t as u64).unwrap();
            assert!(r.realized);
            assert!(r.local_depth <= 3 * 2);
        }
        let whole = HierarchySpec::new(4, 4).unwrap();
        let r = hierarchical_route(&whole, &random_permutations(16, 1, 0)[0], 0).unwrap();
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn boundary_scale() {
        assert_eq!(boundary_capacity(256), 128.0);
        assert_eq!(boundary_capacity(4096), 768.0);
    }
}
