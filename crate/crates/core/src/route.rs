//! Two-phase Valiant routing realised as matching-swap schedules.
//!
//! Pebble `v` starts on vertex `v` and must end on `pi[v]`. Valiant routing
//! sends it first to an intermediate vertex `sigma[v]` (scatter) and then to
//! `pi[v]` (gather) along canonical shortest paths. The path set is turned
//! into a sequence of matchings by a greedy farthest-first scheduler; every
//! step swaps the pebbles on each matched edge.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graphs::WeightedGraph;
use crate::rng::{derive_seed, random_permutation, rng_from_seed, substream};

/// All-pairs canonical shortest paths on the unweighted support.
///
/// Ties are broken towards the lowest-index predecessor, so `path(u, v)` is a
/// pure function of the graph.
#[derive(Debug, Clone)]
pub struct PathOracle {
    graph: WeightedGraph,
    n: usize,
    dist: Vec<u16>,
}

impl PathOracle {
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        let n = g.num_vertices();
        let mut dist = vec![u16::MAX; n * n];
        for s in 0..n {
            let d = g.bfs_distances(s);
            for (v, &x) in d.iter().enumerate() {
                if x == usize::MAX {
                    return Err(Error::Disconnected);
                }
                dist[s * n + v] = u16::try_from(x).map_err(|_| Error::Resource("graph diameter exceeds 65535".into()))?;
            }
        }
        Ok(Self { graph: g.clone(), n, dist })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn distance(&self, u: usize, v: usize) -> usize {
        self.dist[u * self.n + v] as usize
    }

    /// Vertices of the canonical path from `u` to `v`, both ends included.
    /// `path(u, u)` is the single vertex `u` (a walk with no edges).
    pub fn path(&self, u: usize, v: usize) -> Vec<usize> {
        let mut rev = vec![v];
        let mut x = v;
        while x != u {
            let want = self.distance(u, x) - 1;
            x = self.graph.neighbors(x).iter().map(|&(y, _)| y).find(|&y| self.distance(u, y) == want).expect("BFS layers are consistent");
            rev.push(x);
        }
        rev.reverse();
        rev
    }

    pub fn diameter(&self) -> usize {
        self.dist.iter().copied().max().unwrap_or(0) as usize
    }
}

/// Choice of intermediate destinations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaStrategy {
    /// Uniformly random among the pebbles that have to move.
    Uniform,
    /// Conditional expectations on an exponential congestion potential.
    Derandomized,
    /// A given permutation (affine maps on Cayley hosts, tests).
    Explicit(Vec<usize>),
}

/// Scatter and gather paths with their measured congestion and dilation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSet {
    pub sigma: Vec<usize>,
    /// `scatter[v]` runs from `v` to `sigma[v]`.
    pub scatter: Vec<Vec<usize>>,
    /// `gather[v]` runs from `sigma[v]` to `pi[v]`.
    pub gather: Vec<Vec<usize>>,
    /// Maximum edge load within each phase.
    pub phase_congestion: [usize; 2],
    /// Longest path within each phase.
    pub phase_dilation: [usize; 2],
    /// `max(phase_congestion)`; the phases run one after the other.
    pub congestion: usize,
    /// Longest concatenated scatter+gather walk.
    pub dilation: usize,
}

impl PathSet {
    /// Congestion-plus-dilation depth estimate `max_p C_p + max_p D_p` over
    /// the two phases. This is the routing depth reported in experiment
    /// tables.
    pub fn lmr_estimate(&self) -> usize {
        self.congestion + self.phase_dilation[0].max(self.phase_dilation[1])
    }
}

fn edge_key(u: usize, v: usize, n: usize) -> usize {
    u.min(v) * n + u.max(v)
}

/// Maximum number of paths traversing any edge, in either direction.
pub fn path_congestion(paths: &[Vec<usize>], n: usize) -> usize {
    let mut load: HashMap<usize, usize> = HashMap::new();
    for p in paths {
        for w in p.windows(2) {
            *load.entry(edge_key(w[0], w[1], n)).or_default() += 1;
        }
    }
    load.values().copied().max().unwrap_or(0)
}

pub fn validate_permutation(pi: &[usize], n: usize) -> Result<()> {
    if pi.len() != n {
        return param(format!("permutation has length {}, expected {n}", pi.len()));
    }
    let mut seen = vec![false; n];
    for &x in pi {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return param("not a permutation");
        }
    }
    Ok(())
}

pub fn is_identity(pi: &[usize]) -> bool {
    pi.iter().enumerate().all(|(i, &x)| i == x)
}

/// Build the two-phase path set.
///
/// Pebbles already on their target keep `sigma[v] = v` and never move; the
/// intermediate destinations of the others are drawn from the vertices the
/// moving pebbles start on.
pub fn valiant_paths(oracle: &PathOracle, pi: &[usize], strategy: &SigmaStrategy, seed: u64) -> Result<PathSet> {
    let n = oracle.num_vertices();
    validate_permutation(pi, n)?;
    let sigma = match strategy {
        SigmaStrategy::Uniform => uniform_sigma(pi, seed),
        SigmaStrategy::Derandomized => derandomized_sigma(oracle, pi),
        SigmaStrategy::Explicit(s) => {
            validate_permutation(s, n)?;
            s.clone()
        }
    };
    Ok(paths_for_sigma(oracle, pi, sigma))
}

/// Path set for a fixed intermediate permutation.
pub fn paths_for_sigma(oracle: &PathOracle, pi: &[usize], sigma: Vec<usize>) -> PathSet {
    let n = oracle.num_vertices();
    let scatter: Vec<Vec<usize>> = (0..n).map(|v| oracle.path(v, sigma[v])).collect();
    let gather: Vec<Vec<usize>> = (0..n).map(|v| oracle.path(sigma[v], pi[v])).collect();
    let len = |p: &Vec<usize>| p.len() - 1;
    let phase_congestion = [path_congestion(&scatter, n), path_congestion(&gather, n)];
    let phase_dilation = [scatter.iter().map(len).max().unwrap_or(0), gather.iter().map(len).max().unwrap_or(0)];
    let dilation = (0..n).map(|v| len(&scatter[v]) + len(&gather[v])).max().unwrap_or(0);
    PathSet { sigma, scatter, gather, congestion: phase_congestion[0].max(phase_congestion[1]), phase_congestion, phase_dilation, dilation }
}

fn uniform_sigma(pi: &[usize], seed: u64) -> Vec<usize> {
    let movers: Vec<usize> = (0..pi.len()).filter(|&v| pi[v] != v).collect();
    let mut rng = rng_from_seed(seed);
    let perm = random_permutation(movers.len(), &mut rng);
    let mut sigma: Vec<usize> = (0..pi.len()).collect();
    for (i, &v) in movers.iter().enumerate() {
        sigma[v] = movers[perm[i]];
    }
    sigma
}

/// Intermediate destinations by the method of conditional expectations.
///
/// Moving pebbles are assigned in index order. Each takes the free
/// intermediate vertex that least increases
/// `sum_e exp(lambda X_e^scatter) + exp(lambda X_e^gather)`, where `X_e` are
/// the loads of the paths fixed so far and `lambda = ln N / max(D, 1)` with
/// `D` the host diameter. Ties go to the lowest vertex index.
pub fn derandomized_sigma(oracle: &PathOracle, pi: &[usize]) -> Vec<usize> {
    let n = oracle.num_vertices();
    let mut sigma: Vec<usize> = (0..n).collect();
    let movers: Vec<usize> = (0..n).filter(|&v| pi[v] != v).collect();
    if movers.is_empty() {
        return sigma;
    }
    let lambda = (n as f64).ln() / oracle.diameter().max(1) as f64;
    let mut load_s: HashMap<usize, u32> = HashMap::new();
    let mut load_g: HashMap<usize, u32> = HashMap::new();
    let mut free: Vec<usize> = movers.clone();
    let increase = |path: &[usize], load: &HashMap<usize, u32>| -> f64 {
        path.windows(2)
            .map(|w| {
                let x = *load.get(&edge_key(w[0], w[1], n)).unwrap_or(&0) as f64;
                (lambda * (x + 1.0)).exp() - (lambda * x).exp()
            })
            .sum()
    };
    for &v in &movers {
        let mut best: Option<(f64, usize)> = None;
        for (i, &c) in free.iter().enumerate() {
            let ps = oracle.path(v, c);
            let pg = oracle.path(c, pi[v]);
            let cost = increase(&ps, &load_s) + increase(&pg, &load_g);
            let better = match best {
                None => true,
                Some((b, j)) => cost < b - 1e-12 || ((cost - b).abs() <= 1e-12 && c < free[j]),
            };
            if better {
                best = Some((cost, i));
            }
        }
        let (_, i) = best.expect("free set is nonempty");
        let c = free.swap_remove(i);
        sigma[v] = c;
        for (path, load) in [(oracle.path(v, c), &mut load_s), (oracle.path(c, pi[v]), &mut load_g)] {
            for w in path.windows(2) {
                *load.entry(edge_key(w[0], w[1], n)).or_default() += 1;
            }
        }
    }
    sigma
}

/// Ordered list of matchings; each pair swaps the pebbles on its endpoints.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub steps: Vec<Vec<(usize, usize)>>,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn num_swaps(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    pub fn extend(&mut self, other: Schedule) {
        self.steps.extend(other.steps);
    }

    /// Every pair is an edge of `g` and no vertex appears twice in a step.
    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        let mut stamp = vec![usize::MAX; g.num_vertices()];
        for (t, step) in self.steps.iter().enumerate() {
            for &(u, v) in step {
                if u >= g.num_vertices() || v >= g.num_vertices() || !g.has_edge(u, v) {
                    return param(format!("step {t}: ({u},{v}) is not an edge"));
                }
                for x in [u, v] {
                    if stamp[x] == t {
                        return param(format!("step {t}: vertex {x} matched twice"));
                    }
                    stamp[x] = t;
                }
            }
        }
        Ok(())
    }

    /// Occupant of every vertex after running the schedule from `start`.
    pub fn apply_to(&self, start: &[usize]) -> Vec<usize> {
        let mut occ = start.to_vec();
        for step in &self.steps {
            for &(u, v) in step {
                occ.swap(u, v);
            }
        }
        occ
    }

    /// Whether the schedule moves pebble `v` from vertex `v` to `pi[v]`.
    pub fn realizes(&self, pi: &[usize]) -> bool {
        let start: Vec<usize> = (0..pi.len()).collect();
        let occ = self.apply_to(&start);
        (0..pi.len()).all(|v| occ[pi[v]] == v)
    }

    /// One line per step, `u:v` pairs separated by spaces.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for step in &self.steps {
            let line: Vec<String> = step.iter().map(|(u, v)| format!("{u}:{v}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Schedule> {
        let mut steps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut step = Vec::new();
            for tok in line.split_whitespace() {
                let bad = || Error::Parse { line: i + 1, msg: format!("expected 'u:v', found '{tok}'") };
                let (a, b) = tok.split_once(':').ok_or_else(bad)?;
                step.push((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
            }
            steps.push(step);
        }
        Ok(Schedule { steps })
    }
}

/// Result of routing one permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingResult {
    /// Number of matching steps.
    pub depth: usize,
    pub schedule: Schedule,
    pub measured_c: usize,
    pub measured_d: usize,
    /// Congestion-plus-dilation estimate of the path set, see [`PathSet::lmr_estimate`].
    pub lmr_estimate: usize,
    pub phase_depths: [usize; 2],
    /// Whether the schedule reproduces the requested permutation.
    pub realized: bool,
    /// Whether the step cap was hit and the tree-based fallback finished the job.
    pub fallback: bool,
}

/// Congestion-plus-dilation estimates ([`PathSet::lmr_estimate`]) for a batch
/// of permutations; trial `t` draws its intermediate permutation from
/// `derive_seed(seed, "sigma", t)`.
pub fn depth_estimates(oracle: &PathOracle, perms: &[Vec<usize>], strategy: &SigmaStrategy, seed: u64) -> Result<Vec<usize>> {
    perms
        .par_iter()
        .enumerate()
        .map(|(t, pi)| {
            let ps = valiant_paths(oracle, pi, strategy, derive_seed(seed, "sigma", t as u64))?;
            Ok(ps.lmr_estimate())
        })
        .collect()
}

/// `count` uniformly random permutations of `n` elements, permutation `t`
/// drawn from substream `(seed, "pi", t)`.
pub fn random_permutations(n: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..count as u64).map(|t| random_permutation(n, &mut substream(seed, "pi", t))).collect()
}

/// Congestion-plus-dilation estimate for two-phase routing of the pebbles in
/// `movers` only; their intermediates are a uniform permutation of their own
/// start vertices and all other pebbles are ignored.
pub fn subset_lmr_estimate(oracle: &PathOracle, pi: &[usize], movers: &[usize], seed: u64) -> usize {
    let perm = random_permutation(movers.len(), &mut rng_from_seed(seed));
    let pairs: Vec<(usize, usize, usize)> = movers.iter().enumerate().map(|(i, &v)| (v, movers[perm[i]], pi[v])).collect();
    two_phase_estimate(oracle.num_vertices(), &pairs, |u, v| oracle.path(u, v))
}

/// [`PathSet::lmr_estimate`] for uniform intermediates without all-pairs
/// tables, for graphs too large for [`PathOracle`]. Paths are shortest paths
/// found by bidirectional search that meet at the lowest-index vertex of the
/// first meeting layer, so individual paths may differ from the canonical
/// ones.
pub fn sparse_lmr_estimate(g: &WeightedGraph, pi: &[usize], seed: u64) -> Result<usize> {
    let n = g.num_vertices();
    validate_permutation(pi, n)?;
    let sigma = uniform_sigma(pi, seed);
    let pairs: Vec<(usize, usize, usize)> = (0..n).filter(|&v| pi[v] != v).map(|v| (v, sigma[v], pi[v])).collect();
    let mut search = BidirectionalSearch::new(n);
    let mut failed = false;
    let est = two_phase_estimate(n, &pairs, |u, v| {
        search.path(g, u, v).unwrap_or_else(|| {
            failed = true;
            vec![u]
        })
    });
    if failed {
        return Err(Error::Disconnected);
    }
    Ok(est)
}

fn two_phase_estimate(n: usize, pairs: &[(usize, usize, usize)], mut path: impl FnMut(usize, usize) -> Vec<usize>) -> usize {
    let mut congestion = 0;
    let mut dilation = 0;
    for phase in 0..2 {
        let mut load: HashMap<usize, usize> = HashMap::new();
        for &(v, s, t) in pairs {
            let p = if phase == 0 { path(v, s) } else { path(s, t) };
            dilation = dilation.max(p.len() - 1);
            for w in p.windows(2) {
                let e = load.entry(edge_key(w[0], w[1], n)).or_default();
                *e += 1;
                congestion = congestion.max(*e);
            }
        }
    }
    congestion + dilation
}

/// Layer-synchronous bidirectional BFS with reusable marks.
struct BidirectionalSearch {
    epoch: u32,
    mark: [Vec<u32>; 2],
    depth: [Vec<u32>; 2],
    parent: [Vec<u32>; 2],
}

impl BidirectionalSearch {
    fn new(n: usize) -> Self {
        Self { epoch: 0, mark: [vec![0; n], vec![0; n]], depth: [vec![0; n], vec![0; n]], parent: [vec![0; n], vec![0; n]] }
    }

    fn path(&mut self, g: &WeightedGraph, u: usize, v: usize) -> Option<Vec<usize>> {
        if u == v {
            return Some(vec![u]);
        }
        self.epoch += 1;
        let e = self.epoch;
        let mut frontier = [vec![u], vec![v]];
        for (side, &root) in [u, v].iter().enumerate() {
            self.mark[side][root] = e;
            self.depth[side][root] = 0;
            self.parent[side][root] = root as u32;
        }
        let mut level = [0u32, 0u32];
        loop {
            let side = usize::from(frontier[1].len() < frontier[0].len());
            if frontier[side].is_empty() {
                return None;
            }
            level[side] += 1;
            let mut next = Vec::new();
            let mut best: Option<(u32, usize)> = None;
            for &x in &frontier[side] {
                for &(y, _) in g.neighbors(x) {
                    if self.mark[side][y] == e {
                        continue;
                    }
                    self.mark[side][y] = e;
                    self.depth[side][y] = level[side];
                    self.parent[side][y] = x as u32;
                    next.push(y);
                    if self.mark[1 - side][y] == e {
                        let key = (self.depth[1 - side][y], y);
                        if best.is_none_or(|b| key < b) {
                            best = Some(key);
                        }
                    }
                }
            }
            if let Some((_, m)) = best {
                let walk = |s: usize, from: usize| {
                    let mut out = vec![from];
                    let mut x = from;
                    while self.depth[s][x] > 0 {
                        x = self.parent[s][x] as usize;
                        out.push(x);
                    }
                    out
                };
                let mut path = walk(0, m);
                path.reverse();
                path.extend(walk(1, m).into_iter().skip(1));
                return Some(path);
            }
            next.sort_unstable();
            frontier[side] = next;
        }
    }
}

/// Turn a path set into a schedule, scatter phase first.
///
/// `capacity` caps the number of swaps per step (`None` means unlimited).
pub fn schedule_paths(oracle: &PathOracle, ps: &PathSet, capacity: Option<usize>) -> Result<(Schedule, [usize; 2], bool)> {
    let n = oracle.num_vertices();
    let g = oracle.graph();
    for p in ps.scatter.iter().chain(&ps.gather) {
        if p.windows(2).any(|w| !g.has_edge(w[0], w[1])) {
            return param("path is not a walk in the graph");
        }
    }
    if let Some(0) = capacity {
        return param("capacity must be at least 1");
    }
    let mut occ: Vec<usize> = (0..n).collect();
    let mut schedule = Schedule::default();
    let mut depths = [0; 2];
    let mut fallback = false;
    for (phase, paths) in [&ps.scatter, &ps.gather].into_iter().enumerate() {
        let mut sim = PhaseSim::new(oracle, &occ, paths, capacity);
        let cap = 4 * (ps.congestion + ps.dilation) + 2 * n + 8;
        let before = schedule.depth();
        while !sim.done() {
            if schedule.depth() - before >= cap {
                schedule.extend(sim.tree_fallback());
                fallback = true;
                break;
            }
            if let Some(end) = sim.try_endgame() {
                schedule.extend(end);
                break;
            }
            let step = sim.step();
            debug_assert!(!step.is_empty(), "a stalled phase always has a waiting cycle");
            schedule.steps.push(step);
        }
        depths[phase] = schedule.depth() - before;
        occ = sim.occ;
    }
    Ok((schedule, depths, fallback))
}

/// Pebble movement inside one phase.
struct PhaseSim<'a> {
    oracle: &'a PathOracle,
    capacity: Option<usize>,
    /// Pebble on each vertex.
    occ: Vec<usize>,
    pos: Vec<usize>,
    target: Vec<usize>,
    /// Vertices still to visit, front first.
    route: Vec<VecDeque<usize>>,
    /// Tie-break between equally distant pebbles: hop count of the pebble's
    /// path for this phase.
    priority: Vec<usize>,
    /// Waiting cycles being rotated, with the number of swaps already done.
    rotations: Vec<(Vec<usize>, usize)>,
    /// Vertices owned by a rotation.
    locked: Vec<bool>,
}

impl<'a> PhaseSim<'a> {
    fn new(oracle: &'a PathOracle, occ: &[usize], paths: &[Vec<usize>], capacity: Option<usize>) -> Self {
        let n = occ.len();
        let mut pos = vec![0; n];
        for (v, &p) in occ.iter().enumerate() {
            pos[p] = v;
        }
        let route = (0..n)
            .map(|p| {
                debug_assert_eq!(paths[p][0], pos[p]);
                paths[p][1..].iter().copied().collect()
            })
            .collect();
        let target = (0..n).map(|p| *paths[p].last().expect("nonempty path")).collect();
        let priority = paths.iter().map(|p| p.len() - 1).collect();
        Self { priority, oracle, capacity, occ: occ.to_vec(), pos, target, route, rotations: Vec::new(), locked: vec![false; n] }
    }

    fn done(&self) -> bool {
        (0..self.pos.len()).all(|p| self.pos[p] == self.target[p])
    }

    fn swap(&mut self, x: usize, y: usize) {
        let (p, q) = (self.occ[x], self.occ[y]);
        self.occ.swap(x, y);
        self.pos[p] = y;
        self.pos[q] = x;
        for (pebble, from, to) in [(p, x, y), (q, y, x)] {
            if self.route[pebble].front() == Some(&to) {
                self.route[pebble].pop_front();
            } else if to != from {
                let t = self.target[pebble];
                self.route[pebble] = self.oracle.path(to, t)[1..].iter().copied().collect();
            }
        }
    }

    fn remaining(&self, p: usize) -> usize {
        self.oracle.distance(self.pos[p], self.target[p])
    }

    /// Neighbours of the pebble's vertex one hop closer to its target, the
    /// planned route first.
    fn next_hops(&self, p: usize) -> Vec<usize> {
        let x = self.pos[p];
        let t = self.target[p];
        let d = self.oracle.distance(x, t);
        let mut hops: Vec<usize> = self.route[p].front().copied().into_iter().collect();
        for &(w, _) in self.oracle.graph().neighbors(x) {
            if self.oracle.distance(w, t) + 1 == d && !hops.contains(&w) {
                hops.push(w);
            }
        }
        hops
    }

    /// One matching step.
    ///
    /// Running rotations take their next swap first. Among the remaining
    /// pebbles, most remaining hops first, swaps in which both pebbles get
    /// closer come next. Then a pebble may push the occupant of a
    /// shortest-path hop back onto its own vertex when that does not lengthen
    /// the occupant's trip, or when the occupant has at least two hops fewer
    /// to go; either way the sum of squared remaining distances drops.
    /// Finally, pebbles that did not move and wait on each other in a cycle
    /// start rotating it.
    fn step(&mut self) -> Vec<(usize, usize)> {
        let n = self.pos.len();
        let cap = self.capacity.unwrap_or(usize::MAX);
        let mut used = self.locked.clone();
        let mut step = Vec::new();
        for (cycle, done) in &mut self.rotations {
            if step.len() >= cap {
                break;
            }
            step.push(rotation_swap(cycle, *done));
            *done += 1;
        }
        let dist: Vec<usize> = (0..n).map(|p| self.remaining(p)).collect();
        let mut order: Vec<usize> = (0..n).filter(|&p| dist[p] > 0 && !used[self.pos[p]]).collect();
        order.sort_by_key(|&p| (std::cmp::Reverse(dist[p]), std::cmp::Reverse(self.priority[p]), p));
        let hops: Vec<Vec<usize>> = (0..n).map(|p| if dist[p] == 0 { Vec::new() } else { self.next_hops(p) }).collect();
        for mutual_only in [true, false] {
            for &p in &order {
                if step.len() >= cap {
                    break;
                }
                let x = self.pos[p];
                if used[x] {
                    continue;
                }
                let pick = hops[p].iter().copied().find(|&y| {
                    if used[y] {
                        return false;
                    }
                    let q = self.occ[y];
                    if hops[q].contains(&x) {
                        return true;
                    }
                    !mutual_only && (self.oracle.distance(x, self.target[q]) <= dist[q] || dist[p] >= dist[q] + 2)
                });
                if let Some(y) = pick {
                    used[x] = true;
                    used[y] = true;
                    step.push((x, y));
                }
            }
        }
        if step.len() < cap {
            self.start_rotations(&hops, &mut used, &mut step, cap);
        }
        for &(x, y) in &step {
            self.swap(x, y);
        }
        let locked = &mut self.locked;
        self.rotations.retain(|(cycle, done)| {
            let finished = *done + 1 >= cycle.len();
            if finished {
                for &v in cycle {
                    locked[v] = false;
                }
            }
            !finished
        });
        step
    }

    /// Find cycles among idle waiting pebbles (each pointing at its first
    /// hop) and issue their first swap.
    ///
    /// A rotation of a cycle c_0 -> c_1 -> ... -> c_{m-1} -> c_0 swaps
    /// (c_{m-1}, c_0), then walks the pebble from c_0 backwards around the
    /// cycle; after m - 1 swaps every pebble on it has advanced one hop.
    fn start_rotations(&mut self, hops: &[Vec<usize>], used: &mut [bool], step: &mut Vec<(usize, usize)>, cap: usize) {
        let n = self.pos.len();
        let next = |x: usize| -> Option<usize> {
            let p = self.occ[x];
            hops[p].first().copied().filter(|&y| !used[x] && !used[y])
        };
        // 0 unvisited, 1 on the current walk, 2 settled
        let mut state = vec![0u8; n];
        let mut cycles = Vec::new();
        for s in 0..n {
            let mut walk = Vec::new();
            let mut x = s;
            let mut closed = false;
            while state[x] == 0 {
                state[x] = 1;
                walk.push(x);
                match next(x) {
                    Some(y) => x = y,
                    None => break,
                }
                closed = state[x] == 1;
            }
            if closed {
                let at = walk.iter().position(|&w| w == x).expect("on walk");
                cycles.push(walk[at..].to_vec());
            }
            for w in walk {
                state[w] = 2;
            }
        }
        for cycle in cycles {
            if step.len() >= cap {
                break;
            }
            if cycle.len() == 2 {
                step.push((cycle[0], cycle[1]));
                used[cycle[0]] = true;
                used[cycle[1]] = true;
                continue;
            }
            for &v in &cycle {
                used[v] = true;
                self.locked[v] = true;
            }
            step.push(rotation_swap(&cycle, 0));
            self.rotations.push((cycle, 1));
        }
    }

    /// Finish in at most two steps when every cycle of the residual
    /// permutation can be written as two reflections along existing edges.
    fn try_endgame(&mut self) -> Option<Schedule> {
        let n = self.pos.len();
        let g = self.oracle.graph();
        // next[x]: vertex the pebble on x must reach
        let next: Vec<usize> = (0..n).map(|x| self.target[self.occ[x]]).collect();
        let mut seen = vec![false; n];
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for s in 0..n {
            if seen[s] || next[s] == s {
                continue;
            }
            let mut cyc = vec![s];
            seen[s] = true;
            let mut x = next[s];
            while x != s {
                seen[x] = true;
                cyc.push(x);
                x = next[x];
            }
            // rotation c_i -> c_{i+1} = (i -> 1-i) after (i -> -i)
            let m = cyc.len();
            for i in 0..m {
                let j = (m - i) % m;
                if i < j {
                    first.push((cyc[i], cyc[j]));
                }
                let k = (m + 1 - i) % m;
                if i < k {
                    second.push((cyc[i], cyc[k]));
                }
            }
        }
        let fits = |s: &[(usize, usize)]| self.capacity.is_none_or(|k| s.len() <= k);
        let ok = first.iter().chain(&second).all(|&(u, v)| g.has_edge(u, v));
        if !ok || !fits(&first) || !fits(&second) {
            return None;
        }
        let mut out = Schedule::default();
        for step in [first, second] {
            if !step.is_empty() {
                for &(u, v) in &step {
                    self.swap(u, v);
                }
                out.steps.push(step);
            }
        }
        debug_assert!(self.done());
        Some(out)
    }

    /// Guaranteed completion: repeatedly fix a leaf of a BFS spanning tree by
    /// walking the pebble it needs along the tree, one swap per step.
    fn tree_fallback(&mut self) -> Schedule {
        let g = self.oracle.graph();
        let n = self.pos.len();
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut out = Schedule::default();
        let mut alive = vec![true; n];
        // reverse BFS order removes leaves first
        for &leaf in order.iter().rev() {
            let p = (0..n).find(|&p| self.target[p] == leaf).expect("targets are a permutation");
            let walk = tree_path(&parent, self.pos[p], leaf, &alive);
            for w in walk.windows(2) {
                self.swap(w[0], w[1]);
                out.steps.push(vec![(w[0], w[1])]);
            }
            alive[leaf] = false;
        }
        out
    }
}

/// Swap number `j` of the rotation of `cycle`.
fn rotation_swap(cycle: &[usize], j: usize) -> (usize, usize) {
    let m = cycle.len();
    (cycle[m - 1 - j], cycle[(m - j) % m])
}

fn tree_path(parent: &[usize], from: usize, to: usize, alive: &[bool]) -> Vec<usize> {
    let ancestors = |mut x: usize| {
        let mut v = vec![x];
        while parent[x] != usize::MAX {
            x = parent[x];
            v.push(x);
        }
        v
    };
    let a = ancestors(from);
    let b = ancestors(to);
    let lca = *a.iter().find(|x| b.contains(x)).expect("same tree");
    let mut path: Vec<usize> = a.iter().copied().take_while(|&x| x != lca).collect();
    path.push(lca);
    let down: Vec<usize> = b.iter().copied().take_while(|&x| x != lca).collect();
    path.extend(down.into_iter().rev());
    debug_assert!(path.iter().all(|&x| alive[x]));
    path
}

/// Route `pi` on `g`: Valiant paths, greedy scheduling, verification.
pub fn route(g: &WeightedGraph, pi: &[usize], strategy: &SigmaStrategy, seed: u64) -> Result<RoutingResult> {
    let oracle = PathOracle::new(g)?;
    route_with_oracle(&oracle, pi, strategy, seed, None)
}

/// [`route`] with a prebuilt oracle and an optional per-step swap capacity.
pub fn route_with_oracle(oracle: &PathOracle, pi: &[usize], strategy: &SigmaStrategy, seed: u64, capacity: Option<usize>) -> Result<RoutingResult> {
    validate_permutation(pi, oracle.num_vertices())?;
    if is_identity(pi) {
        return Ok(RoutingResult {
            depth: 0,
            schedule: Schedule::default(),
            measured_c: 0,
            measured_d: 0,
            lmr_estimate: 0,
            phase_depths: [0, 0],
            realized: true,
            fallback: false,
        });
    }
    let ps = valiant_paths(oracle, pi, strategy, seed)?;
    let (schedule, phase_depths, fallback) = schedule_paths(oracle, &ps, capacity)?;
    let realized = schedule.realizes(pi);
    if !realized {
        return Err(Error::Construction("schedule does not realise the permutation".into()));
    }
    Ok(RoutingResult {
        depth: schedule.depth(),
        measured_c: ps.congestion,
        measured_d: ps.dilation,
        lmr_estimate: ps.lmr_estimate(),
        phase_depths,
        realized,
        fallback,
        schedule,
    })
}

/// Valiant routing with at most `k` swaps per step.
pub fn partial_matching_route(g: &WeightedGraph, pi: &[usize], k: usize, seed: u64) -> Result<RoutingResult> {
    if k < 1 {
        return param("capacity k must be at least 1");
    }
    let oracle = PathOracle::new(g)?;
    route_with_oracle(&oracle, pi, &SigmaStrategy::Uniform, seed, Some(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::build_random_regular_graph;
    use crate::rng::rng_from_seed;

    #[test]
    fn canonical_paths_basic() {
        let k7 = WeightedGraph::complete(7);
        let o = PathOracle::new(&k7).unwrap();
        assert_eq!(o.path(3, 3), vec![3]);
        assert_eq!(o.path(2, 5), vec![2, 5]);
        let c6 = WeightedGraph::cycle(6);
        let o = PathOracle::new(&c6).unwrap();
        // two shortest paths 0-1-2-3 and 0-5-4-3: lowest-index predecessor of 3 is 2
        assert_eq!(o.path(0, 3), vec![0, 1, 2, 3]);
        assert!(PathOracle::new(&WeightedGraph::empty(3)).is_err());
    }

    #[test]
    fn identity_routes_in_zero_steps() {
        let g = WeightedGraph::cycle(5);
        let pi: Vec<usize> = (0..5).collect();
        let r = route(&g, &pi, &SigmaStrategy::Uniform, 1).unwrap();
        assert_eq!((r.depth, r.measured_c, r.measured_d), (0, 0, 0));
        let o = PathOracle::new(&g).unwrap();
        let ps = valiant_paths(&o, &pi, &SigmaStrategy::Explicit(pi.clone()), 0).unwrap();
        assert_eq!((ps.congestion, ps.dilation), (0, 0));
    }

    #[test]
    fn single_pebble_walks_its_path() {
        // a 3-cycle of pebbles on a path graph: each moves along its own path
        let g = WeightedGraph::path(5);
        let o = PathOracle::new(&g).unwrap();
        let pi = vec![4, 1, 2, 3, 0];
        let ps = paths_for_sigma(&o, &pi, (0..5).collect());
        let (s, d, _) = schedule_paths(&o, &ps, None).unwrap();
        assert!(s.realizes(&pi));
        assert_eq!(d[0], 0);
        s.validate(&g).unwrap();
    }

    #[test]
    fn disjoint_paths_run_in_parallel() {
        let g = WeightedGraph::path(6);
        let o = PathOracle::new(&g).unwrap();
        let pi = vec![1, 0, 2, 3, 5, 4];
        let ps = paths_for_sigma(&o, &pi, (0..6).collect());
        let (s, _, _) = schedule_paths(&o, &ps, None).unwrap();
        assert_eq!(s.depth(), 1);
    }

    #[test]
    fn bidirectional_paths_are_shortest() {
        let g = build_random_regular_graph(120, 4, 3).unwrap();
        let oracle = PathOracle::new(&g).unwrap();
        let mut search = BidirectionalSearch::new(120);
        for u in (0..120).step_by(7) {
            for v in (0..120).step_by(5) {
                let p = search.path(&g, u, v).unwrap();
                assert_eq!(p.len() - 1, oracle.distance(u, v));
                assert_eq!((p[0], *p.last().unwrap()), (u, v));
                assert!(p.windows(2).all(|w| g.has_edge(w[0], w[1])));
            }
        }
        let pi = random_permutations(120, 1, 8).remove(0);
        let sparse = sparse_lmr_estimate(&g, &pi, 2).unwrap();
        let exact = valiant_paths(&oracle, &pi, &SigmaStrategy::Uniform, 2).unwrap().lmr_estimate();
        assert!(sparse.abs_diff(exact) <= 2, "{sparse} vs {exact}");
        let movers: Vec<usize> = (0..120).collect();
        assert_eq!(subset_lmr_estimate(&oracle, &(0..120).collect::<Vec<_>>(), &[], 0), 0);
        assert!(subset_lmr_estimate(&oracle, &pi, &movers, 1) > 0);
    }

    #[test]
    fn complete_graph_routes_in_four_steps() {
        let g = WeightedGraph::complete(7);
        let o = PathOracle::new(&g).unwrap();
        let mut rng = rng_from_seed(3);
        for t in 0..200 {
            let pi = random_permutation(7, &mut rng);
            let r = route_with_oracle(&o, &pi, &SigmaStrategy::Uniform, t, None).unwrap();
            assert!(r.realized && r.depth <= 4);
            r.schedule.validate(&g).unwrap();
        }
    }

    #[test]
    fn capacity_truncates_steps() {
        let g = build_random_regular_graph(32, 4, 1).unwrap();
        let pi = random_permutation(32, &mut rng_from_seed(9));
        let full = partial_matching_route(&g, &pi, 16, 5).unwrap();
        let free = route(&g, &pi, &SigmaStrategy::Uniform, 5).unwrap();
        assert_eq!(full.depth, free.depth);
        let one = partial_matching_route(&g, &pi, 1, 5).unwrap();
        assert!(one.schedule.steps.iter().all(|s| s.len() == 1));
        let o = PathOracle::new(&g).unwrap();
        let ps = valiant_paths(&o, &pi, &SigmaStrategy::Uniform, 5).unwrap();
        let hops: usize = ps.scatter.iter().chain(&ps.gather).map(|p| p.len() - 1).sum();
        assert!(one.depth * 2 >= hops);
        assert!(partial_matching_route(&g, &pi, 0, 5).is_err());
    }

    #[test]
    fn schedule_text_round_trip() {
        let s = Schedule { steps: vec![vec![(0, 1), (2, 3)], vec![(1, 2)]] };
        assert_eq!(s.to_text(), "0:1 2:3\n1:2\n");
        assert_eq!(Schedule::from_text(&s.to_text()).unwrap(), s);
        assert!(Schedule::from_text("0-1").is_err());
    }

    #[test]
    fn validate_rejects_bad_steps() {
        let g = WeightedGraph::path(3);
        assert!(Schedule { steps: vec![vec![(0, 2)]] }.validate(&g).is_err());
        assert!(Schedule { steps: vec![vec![(0, 1), (1, 2)]] }.validate(&g).is_err());
    }

    #[test]
    fn derandomized_on_complete_graph() {
        let g = WeightedGraph::complete(8);
        let o = PathOracle::new(&g).unwrap();
        let pi = random_permutation(8, &mut rng_from_seed(2));
        let ps = valiant_paths(&o, &pi, &SigmaStrategy::Derandomized, 0).unwrap();
        assert!(ps.congestion <= 2);
        // both pebbles cross the single edge in one of the phases
        let two = WeightedGraph::path(2);
        let r = route(&two, &[1, 0], &SigmaStrategy::Derandomized, 0).unwrap();
        assert_eq!(r.measured_c, 2);
        assert_eq!(r.depth, 1);
    }
}
