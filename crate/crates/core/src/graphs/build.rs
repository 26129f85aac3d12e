use std::collections::HashSet;

use rand::Rng as _;

use super::{Boundary, GridModel, GridSpec, Hypergraph, LiftConvention, VoltageAssignment, WeightedGraph};
use crate::error::{param, Error, Result};
use crate::rng::rng_from_seed;

/// Restart budget for the configuration-model samplers.
pub const CONFIG_MODEL_RESTARTS: usize = 1000;

/// Random picks tried before scanning for any admissible group.
const PICK_ATTEMPTS: usize = 64;

/// Point-line incidence hypergraph of PG(2, q) for q in {2, 3}.
///
/// Lines are the translates `i + D (mod q^2+q+1)` of a Singer difference set
/// `D`, listed in the order of `D`; line `i` is hyperedge `i`.
pub fn build_projective_plane(q: usize) -> Result<Hypergraph> {
    let diff: &[usize] = match q {
        2 => &[0, 1, 3],
        3 => &[0, 1, 3, 9],
        _ => return param(format!("projective plane order q={q} not supported (use 2 or 3)")),
    };
    let n = q * q + q + 1;
    let lines = (0..n).map(|i| diff.iter().map(|&d| (i + d) % n).collect()).collect();
    Hypergraph::new(n, q + 1, lines)
}

/// (d, r)-regular hypergraph from the configuration model.
///
/// The `N d` vertex stubs are grouped r at a time. Groups that would repeat a
/// vertex are redrawn; when no admissible group is left the whole pairing is
/// restarted, up to [`CONFIG_MODEL_RESTARTS`] times.
pub fn build_random_regular_hypergraph(n: usize, d: usize, r: usize, seed: u64) -> Result<Hypergraph> {
    if r < 2 || d < 1 {
        return param(format!("need d >= 1 and r >= 2, got d={d}, r={r}"));
    }
    if n < r {
        return param(format!("N={n} smaller than r={r}"));
    }
    if !(n * d).is_multiple_of(r) {
        return param(format!("N*d = {} is not divisible by r={r}", n * d));
    }
    let mut rng = rng_from_seed(seed);
    'restart: for _ in 0..CONFIG_MODEL_RESTARTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut edges = Vec::with_capacity(n * d / r);
        while !stubs.is_empty() {
            let mut picked: Option<Vec<usize>> = None;
            for _ in 0..PICK_ATTEMPTS {
                let idx = sample_distinct_indices(stubs.len(), r, &mut rng);
                if idx.len() < r {
                    break;
                }
                let verts: Vec<usize> = idx.iter().map(|&i| stubs[i]).collect();
                if all_distinct(&verts) {
                    picked = Some(idx);
                    break;
                }
            }
            let idx = match picked {
                Some(idx) => idx,
                None => match admissible_group(&stubs, r, &mut rng) {
                    Some(idx) => idx,
                    None => continue 'restart,
                },
            };
            let mut verts: Vec<usize> = idx.iter().map(|&i| stubs[i]).collect();
            verts.sort_unstable();
            let mut idx = idx;
            idx.sort_unstable_by(|a, b| b.cmp(a));
            for i in idx {
                stubs.swap_remove(i);
            }
            edges.push(verts);
        }
        return Hypergraph::new(n, r, edges);
    }
    Err(Error::Construction(format!("no ({d},{r})-regular hypergraph on {n} vertices after {CONFIG_MODEL_RESTARTS} restarts")))
}

/// Simple d-regular graph from the configuration model.
///
/// Stubs are paired one edge at a time, redrawing pairs that would create a
/// loop or a multi-edge, and restarting when no admissible pair remains.
pub fn build_random_regular_graph(n: usize, d: usize, seed: u64) -> Result<WeightedGraph> {
    if d >= n {
        return param(format!("degree d={d} must be below N={n}"));
    }
    if !(n * d).is_multiple_of(2) {
        return param(format!("N*d = {} is odd", n * d));
    }
    let mut rng = rng_from_seed(seed);
    'restart: for _ in 0..CONFIG_MODEL_RESTARTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(n * d / 2);
        let mut edges = Vec::with_capacity(n * d / 2);
        while !stubs.is_empty() {
            let ok = |a: usize, b: usize, seen: &HashSet<(usize, usize)>| a != b && !seen.contains(&(a.min(b), a.max(b)));
            let mut picked = None;
            for _ in 0..PICK_ATTEMPTS {
                let i = rng.random_range(0..stubs.len());
                let j = rng.random_range(0..stubs.len());
                if i != j && ok(stubs[i], stubs[j], &seen) {
                    picked = Some((i, j));
                    break;
                }
            }
            if picked.is_none() {
                let m = stubs.len();
                let cands: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).filter(|&(i, j)| ok(stubs[i], stubs[j], &seen)).collect();
                if cands.is_empty() {
                    continue 'restart;
                }
                picked = Some(cands[rng.random_range(0..cands.len())]);
            }
            let (i, j) = picked.expect("pair chosen above");
            let (a, b) = (stubs[i], stubs[j]);
            seen.insert((a.min(b), a.max(b)));
            edges.push((a, b));
            stubs.swap_remove(i.max(j));
            stubs.swap_remove(i.min(j));
        }
        return WeightedGraph::from_unit_edges(n, edges);
    }
    Err(Error::Construction(format!("no simple {d}-regular graph on {n} vertices after {CONFIG_MODEL_RESTARTS} restarts")))
}

fn sample_distinct_indices(len: usize, k: usize, rng: &mut crate::rng::Rng) -> Vec<usize> {
    if len < k {
        return Vec::new();
    }
    rand::seq::index::sample(rng, len, k).into_vec()
}

fn all_distinct(v: &[usize]) -> bool {
    (0..v.len()).all(|i| (i + 1..v.len()).all(|j| v[i] != v[j]))
}

/// A random group of `r` stub indices on distinct vertices, if one exists.
fn admissible_group(stubs: &[usize], r: usize, rng: &mut crate::rng::Rng) -> Option<Vec<usize>> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..stubs.len()).collect();
    order.shuffle(rng);
    let mut out = Vec::with_capacity(r);
    for i in order {
        if out.iter().all(|&j: &usize| stubs[j] != stubs[i]) {
            out.push(i);
            if out.len() == r {
                return Some(out);
            }
        }
    }
    None
}

/// Grid hypergraph on the n x n array, vertices indexed row-major.
///
/// Identical vertex sets produced by different runs (possible when `n` is
/// close to `r` on the torus) are kept once. Runs that would visit a vertex
/// twice are dropped.
pub fn build_grid_hypergraph(spec: &GridSpec) -> Result<Hypergraph> {
    let (n, r) = (spec.n, spec.r);
    if r < 2 {
        return param(format!("run length r={r} must be at least 2"));
    }
    if n < r {
        return param(format!("grid side n={n} smaller than run length r={r}"));
    }
    let mut dirs: Vec<(isize, isize)> = vec![(0, 1), (1, 0)];
    if spec.model == GridModel::ThreeD {
        dirs.extend([(1, 1), (1, -1), (0, 2), (2, 0)]);
    }
    let ni = n as isize;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for &(di, dj) in &dirs {
        for i in 0..ni {
            for j in 0..ni {
                let mut verts = Vec::with_capacity(r);
                let mut inside = true;
                for t in 0..r as isize {
                    let (a, b) = (i + t * di, j + t * dj);
                    match spec.boundary {
                        Boundary::Periodic => verts.push((a.rem_euclid(ni) * ni + b.rem_euclid(ni)) as usize),
                        Boundary::Open => {
                            if a < 0 || a >= ni || b < 0 || b >= ni {
                                inside = false;
                                break;
                            }
                            verts.push((a * ni + b) as usize);
                        }
                    }
                }
                if !inside {
                    continue;
                }
                verts.sort_unstable();
                if verts.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                if seen.insert(verts.clone()) {
                    edges.push(verts);
                }
            }
        }
    }
    Hypergraph::new(n * n, r, edges)
}

/// Weighted graph whose edge weight counts the hyperedges containing both endpoints.
pub fn clique_expansion(h: &Hypergraph) -> WeightedGraph {
    let edges = h.hyperedges().iter().flat_map(|e| (0..e.len()).flat_map(move |a| (a + 1..e.len()).map(move |b| (e[a], e[b], 1u32))));
    WeightedGraph::from_edges(h.num_vertices(), edges).expect("hyperedges are validated")
}

/// Edgewise sum of graphs on a common vertex set.
pub fn union_layers(graphs: &[WeightedGraph]) -> Result<WeightedGraph> {
    let Some(first) = graphs.first() else {
        return param("union of zero layers");
    };
    let n = first.num_vertices();
    if let Some(g) = graphs.iter().find(|g| g.num_vertices() != n) {
        return param(format!("layer has {} vertices, expected {n}", g.num_vertices()));
    }
    WeightedGraph::from_edges(n, graphs.iter().flat_map(|g| g.edges()))
}

/// k-fold cyclic cover of the base hypergraph.
///
/// Base vertex `v` on sheet `j` becomes vertex `j * N + v`. Each base
/// hyperedge yields `k` lifted hyperedges, listed sheet by sheet and keeping
/// the base vertex order.
pub fn voltage_covering(va: &VoltageAssignment) -> Hypergraph {
    let base = &va.base;
    let (n, k) = (base.num_vertices(), va.k);
    let mut edges = Vec::with_capacity(base.num_hyperedges() * k);
    for (e, &s) in base.hyperedges().iter().zip(&va.voltages) {
        let last = e.len() - 1;
        for j in 0..k {
            let lifted = e
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let shift = match va.convention {
                        LiftConvention::FirstVertex => usize::from(i == 0) * s,
                        LiftConvention::LastVertex => usize::from(i == last) * s,
                        LiftConvention::Rotation => i * s,
                    };
                    ((j + shift) % k) * n + v
                })
                .collect();
            edges.push(lifted);
        }
    }
    Hypergraph::new(n * k, base.r(), edges).expect("lift of a valid hypergraph is valid")
}

/// Cayley graph of `Z_n^2` for a generator list, symmetrised under negation.
///
/// Vertex `(a, b)` has index `a * n + b`. Duplicates after symmetrisation are
/// dropped, so the degree is the size of the symmetric generating set.
pub fn build_cayley_graph(n: usize, generators: &[(usize, usize)]) -> Result<WeightedGraph> {
    if n < 2 {
        return param(format!("modulus n={n} must be at least 2"));
    }
    let set = symmetric_generating_set(n, generators)?;
    let edges = (0..n * n).flat_map(|v| {
        let (a, b) = (v / n, v % n);
        set.iter().filter_map(move |&(g1, g2)| {
            let w = ((a + g1) % n) * n + (b + g2) % n;
            (v < w).then_some((v, w, 1u32))
        })
    });
    WeightedGraph::from_edges(n * n, edges)
}

/// `S ∪ -S` reduced mod n, deduplicated, in first-seen order.
pub fn symmetric_generating_set(n: usize, generators: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut set: Vec<(usize, usize)> = Vec::new();
    for &(g1, g2) in generators {
        let g = (g1 % n, g2 % n);
        if g == (0, 0) {
            return param("zero generator");
        }
        let neg = ((n - g.0) % n, (n - g.1) % n);
        for x in [g, neg] {
            if !set.contains(&x) {
                set.push(x);
            }
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fano_is_complete_graph() {
        let h = build_projective_plane(2).unwrap();
        assert_eq!((h.num_vertices(), h.num_hyperedges(), h.d(), h.r()), (7, 7, 3, 3));
        assert!(h.is_regular());
        assert_eq!(clique_expansion(&h), WeightedGraph::complete(7));
    }

    #[test]
    fn pg23_parameters() {
        let h = build_projective_plane(3).unwrap();
        assert_eq!((h.num_vertices(), h.num_hyperedges(), h.d(), h.r()), (13, 13, 4, 4));
        assert_eq!(clique_expansion(&h), WeightedGraph::complete(13));
        assert!(build_projective_plane(4).is_err());
    }

    #[test]
    fn random_hypergraph_regular_and_deterministic() {
        let h = build_random_regular_hypergraph(7, 3, 3, 5).unwrap();
        assert_eq!(h.num_hyperedges(), 7);
        assert!(h.is_regular());
        let a = build_random_regular_hypergraph(64, 3, 3, 1).unwrap();
        let b = build_random_regular_hypergraph(64, 3, 3, 1).unwrap();
        assert_eq!(a, b);
        assert!(build_random_regular_hypergraph(5, 3, 4, 1).is_err());
        let big = build_random_regular_hypergraph(60, 10, 5, 2).unwrap();
        assert!(big.is_regular());
        assert_eq!(big.d(), 10);
    }

    #[test]
    fn random_graph_regular_and_simple() {
        let g = build_random_regular_graph(100, 8, 3).unwrap();
        assert!((0..100).all(|v| g.weighted_degree(v) == 8 && g.degree(v) == 8));
        assert_eq!(g, build_random_regular_graph(100, 8, 3).unwrap());
        assert!(build_random_regular_graph(5, 3, 1).is_err());
        assert!(build_random_regular_graph(4, 4, 1).is_err());
        let k = build_random_regular_graph(6, 5, 9).unwrap();
        assert_eq!(k, WeightedGraph::complete(6));
    }

    #[test]
    fn grid_small_cases() {
        let h = build_grid_hypergraph(&GridSpec::new(3, 3, GridModel::TwoD)).unwrap();
        assert_eq!(h.num_hyperedges(), 6);
        let open = GridSpec::new(3, 3, GridModel::TwoD).with_boundary(Boundary::Open);
        assert_eq!(build_grid_hypergraph(&open).unwrap().num_hyperedges(), 6);
        assert!(build_grid_hypergraph(&GridSpec::new(2, 3, GridModel::TwoD)).is_err());
    }

    #[test]
    fn periodic_grid_degrees() {
        let h = build_grid_hypergraph(&GridSpec::new(8, 3, GridModel::TwoD)).unwrap();
        assert!(h.is_regular());
        let g = clique_expansion(&h);
        assert_eq!(g.regular_degree(), Some(12));
        assert!((0..64).all(|v| g.degree(v) == 8));
        let h3 = build_grid_hypergraph(&GridSpec::new(10, 3, GridModel::ThreeD)).unwrap();
        assert!((0..100).all(|v| clique_expansion(&h3).degree(v) == 20));
    }

    #[test]
    fn open_grid_is_not_regular() {
        let spec = GridSpec::new(8, 3, GridModel::TwoD).with_boundary(Boundary::Open);
        let h = build_grid_hypergraph(&spec).unwrap();
        assert!(!h.is_regular());
        // interior vertex (3,3) lies in three runs per direction
        assert_eq!(clique_expansion(&h).weighted_degree(3 * 8 + 3), 12);
    }

    #[test]
    fn clique_expansion_multiplicity() {
        let h = Hypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let g = clique_expansion(&h);
        assert_eq!(g.weight(0, 1), 2);
        assert_eq!(g.weight(2, 3), 0);
    }

    #[test]
    fn union_adds_degrees() {
        let m1 = WeightedGraph::from_unit_edges(4, [(0, 1), (2, 3)]).unwrap();
        let m2 = WeightedGraph::from_unit_edges(4, [(0, 2), (1, 3)]).unwrap();
        let u = union_layers(&[m1.clone(), m2]).unwrap();
        assert_eq!(u.regular_degree(), Some(2));
        let doubled = union_layers(&[m1.clone(), m1.clone()]).unwrap();
        assert_eq!(doubled, m1.scaled(2).unwrap());
        assert!(union_layers(&[m1, WeightedGraph::empty(3)]).is_err());
    }

    #[test]
    fn trivial_cover_is_disjoint_copies() {
        let fano = build_projective_plane(2).unwrap();
        let va = VoltageAssignment::new(fano, 2, vec![0; 7], LiftConvention::FirstVertex).unwrap();
        let g = clique_expansion(&voltage_covering(&va));
        for u in 0..14 {
            for v in 0..14 {
                let same = u != v && (u / 7 == v / 7);
                assert_eq!(g.has_edge(u, v), same);
            }
        }
    }

    #[test]
    fn lift_conventions_place_shift() {
        let h = Hypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let lift = |c| {
            let va = VoltageAssignment::new(h.clone(), 3, vec![1], c).unwrap();
            voltage_covering(&va).hyperedges()[0].clone()
        };
        assert_eq!(lift(LiftConvention::FirstVertex), vec![3, 1, 2]);
        assert_eq!(lift(LiftConvention::LastVertex), vec![0, 1, 5]);
        assert_eq!(lift(LiftConvention::Rotation), vec![0, 4, 8]);
    }

    #[test]
    fn cayley_torus() {
        let g = build_cayley_graph(3, &[(1, 0), (0, 1)]).unwrap();
        assert_eq!(g.regular_degree(), Some(4));
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2) && g.has_edge(0, 3) && g.has_edge(0, 6));
        assert!(build_cayley_graph(5, &[(0, 5)]).is_err());
        // order-2 generator contributes a single neighbour
        let g = build_cayley_graph(4, &[(2, 0), (0, 1)]).unwrap();
        assert_eq!(g.regular_degree(), Some(3));
    }
}
