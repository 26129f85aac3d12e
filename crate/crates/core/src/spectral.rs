//! Eigenvalue analysis, Ramanujan certification and closed-form bounds.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graphs::{Hypergraph, WeightedGraph};
use crate::rng::rng_from_seed;

/// Largest graph accepted by the dense eigensolver.
pub const DENSE_LIMIT: usize = 10_000;

/// Above this size [`spectrum_auto`] switches to Lanczos.
pub const AUTO_DENSE_LIMIT: usize = 800;

const EPS: f64 = 1e-9;

/// Extreme eigenvalues and derived expansion parameters of a weighted graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(rename = "lambdaN")]
    pub lambda_n: f64,
    pub lambda_star: f64,
    /// Weighted degree for regular graphs, otherwise `lambda1`.
    pub d_prime: f64,
    pub beta: f64,
    /// `lambda_star <= 2 sqrt(d' - 1)`.
    pub ramanujan: bool,
    /// Chung-type diameter bound, absent when `beta >= 1`.
    pub diameter_bound: Option<u64>,
    /// Full spectrum in descending order; empty in extreme-eigenvalue mode.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub eigenvalues: Vec<f64>,
}

impl SpectralSummary {
    fn from_extremes(g: &WeightedGraph, l1: f64, l2: f64, ln: f64, eigenvalues: Vec<f64>) -> Self {
        let d_prime = g.regular_degree().map(|d| d as f64).unwrap_or(l1);
        Self::with_degree(g.num_vertices(), d_prime, l1, l2, ln, eigenvalues)
    }

    fn with_degree(n: usize, d_prime: f64, l1: f64, l2: f64, ln: f64, eigenvalues: Vec<f64>) -> Self {
        let lambda_star = l2.max(ln.abs());
        let beta = if d_prime > 0.0 { lambda_star / d_prime } else { f64::INFINITY };
        let ramanujan = d_prime >= 1.0 && lambda_star <= 2.0 * (d_prime - 1.0).sqrt() + EPS;
        let diameter_bound = diameter_bound(n, d_prime, lambda_star).ok().map(|b| b.chung);
        Self { lambda1: l1, lambda2: l2, lambda_n: ln, lambda_star, d_prime, beta, ramanujan, diameter_bound, eigenvalues }
    }
}

/// All eigenvalues of the adjacency matrix, descending.
pub fn eigenvalues(g: &WeightedGraph) -> Result<Vec<f64>> {
    let n = g.num_vertices();
    if n > DENSE_LIMIT {
        return Err(Error::Resource(format!("N={n} exceeds the dense eigensolve budget of {DENSE_LIMIT}; use spectrum_extreme")));
    }
    eigenvalues_of_matrix(g.to_dense())
}

fn eigenvalues_of_matrix(m: DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let residual = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs()).fold(0.0, f64::max);
    if residual > EPS {
        return param(format!("matrix is not symmetric (residual {residual:e})"));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Full spectrum via dense symmetric eigendecomposition.
pub fn spectrum(g: &WeightedGraph) -> Result<SpectralSummary> {
    let ev = eigenvalues(g)?;
    Ok(summary_from_eigenvalues(g, ev))
}

/// Summary for a precomputed descending spectrum of `g`.
pub fn summary_from_eigenvalues(g: &WeightedGraph, ev: Vec<f64>) -> SpectralSummary {
    let n = ev.len();
    let l1 = ev[0];
    let l2 = if n > 1 { ev[1] } else { ev[0] };
    let ln = ev[n - 1];
    SpectralSummary::from_extremes(g, l1, l2, ln, ev)
}

/// Summary of a known full spectrum (any order) of a `degree`-regular graph.
pub fn summary_for_regular_spectrum(degree: f64, mut ev: Vec<f64>) -> SpectralSummary {
    ev.sort_by(|a, b| b.total_cmp(a));
    let n = ev.len();
    let (l1, l2, ln) = (ev[0], ev[1.min(n - 1)], ev[n - 1]);
    SpectralSummary::with_degree(n, degree, l1, l2, ln, ev)
}

/// Dense for small graphs, Lanczos otherwise.
pub fn spectrum_auto(g: &WeightedGraph) -> Result<SpectralSummary> {
    if g.num_vertices() <= AUTO_DENSE_LIMIT {
        spectrum(g)
    } else {
        spectrum_extreme(g)
    }
}

/// `lambda1`, `lambda2` and `lambdaN` by Lanczos with full reorthogonalisation.
///
/// On regular graphs the constant eigenvector is projected out first, so the
/// top Ritz value converges to `lambda2` directly.
pub fn spectrum_extreme(g: &WeightedGraph) -> Result<SpectralSummary> {
    let n = g.num_vertices();
    if n < 3 {
        return spectrum(g);
    }
    let regular = g.regular_degree();
    let steps = n.min(320);
    let ritz = lanczos_ritz_values(g, steps, regular.is_some());
    let (l1, l2, ln) = match regular {
        Some(d) => (d as f64, ritz[0], ritz.last().expect("nonempty").min(d as f64)),
        None => (ritz[0], ritz.get(1).copied().unwrap_or(ritz[0]), *ritz.last().expect("nonempty")),
    };
    Ok(SpectralSummary::from_extremes(g, l1, l2, ln, Vec::new()))
}

fn lanczos_ritz_values(g: &WeightedGraph, steps: usize, deflate_constant: bool) -> Vec<f64> {
    let n = g.num_vertices();
    let mut rng = rng_from_seed(0x1a_2c05);
    let ones = 1.0 / (n as f64).sqrt();
    let project = |v: &mut [f64]| {
        if deflate_constant {
            let s: f64 = v.iter().sum::<f64>() * ones;
            v.iter_mut().for_each(|x| *x -= s * ones);
        }
    };
    let normalize = |v: &mut [f64]| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        norm
    };
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    project(&mut q);
    normalize(&mut q);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    for j in 0..steps {
        g.mul_vec(&basis[j], &mut w);
        let a: f64 = w.iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            project(&mut w);
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        if j + 1 == steps {
            break;
        }
        let mut next = w.clone();
        let norm = normalize(&mut next);
        if norm < 1e-10 {
            break;
        }
        beta.push(norm);
        basis.push(next);
    }
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    eigenvalues_of_matrix(t).expect("tridiagonal matrix is symmetric")
}

/// Spectral ratio `lambda* / d'` with the size-appropriate solver.
pub fn beta(g: &WeightedGraph) -> Result<f64> {
    Ok(spectrum_auto(g)?.beta)
}

/// Hypergraph Ramanujan test: every non-trivial eigenvalue of the clique
/// expansion lies within `2 sqrt((d-1)(r-1))` of `r - 2`.
pub fn check_ramanujan_hypergraph(h: &Hypergraph, s: &SpectralSummary) -> Result<bool> {
    if !h.is_regular() {
        return param("Ramanujan test needs a regular hypergraph");
    }
    let (d, r) = (h.d() as f64, h.r() as f64);
    let center = r - 2.0;
    let radius = 2.0 * ((d - 1.0) * (r - 1.0)).sqrt() + EPS;
    Ok((s.lambda2 - center).abs() <= radius && (s.lambda_n - center).abs() <= radius)
}

/// Graph Ramanujan test for a d-regular graph: `lambda* <= 2 sqrt(d - 1)`.
pub fn check_ramanujan_graph(d: f64, s: &SpectralSummary) -> bool {
    d >= 1.0 && s.lambda_star <= 2.0 * (d - 1.0).sqrt() + EPS
}

/// Upper end of the Ramanujan band and the matching spectral ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarBound {
    pub lambda_star: f64,
    pub beta: f64,
}

pub fn lambda_star_bound(d: usize, r: usize) -> Result<LambdaStarBound> {
    if d < 3 || r < 3 {
        return param(format!("bound needs d >= 3 and r >= 3, got ({d},{r})"));
    }
    let (df, rf) = (d as f64, r as f64);
    let lambda_star = (rf - 2.0) + 2.0 * ((df - 1.0) * (rf - 1.0)).sqrt();
    Ok(LambdaStarBound { lambda_star, beta: lambda_star / (df * (rf - 1.0)) })
}

/// Two forms of the spectral diameter bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiameterBound {
    /// `ceil(log(N-1) / log(d'/lambda*))`.
    pub chung: u64,
    /// `ceil(2 log2 N / log2(1/beta))`.
    pub log_ratio: u64,
}

pub fn diameter_bound(n: usize, d_prime: f64, lambda_star: f64) -> Result<DiameterBound> {
    if lambda_star.is_nan() || lambda_star >= d_prime || d_prime <= 0.0 {
        return Err(Error::Domain(format!("lambda*={lambda_star} is not below d'={d_prime}; the bound is vacuous")));
    }
    if n <= 1 {
        return Ok(DiameterBound { chung: 0, log_ratio: 0 });
    }
    let ceil = |x: f64| (x - 1e-12).ceil().max(1.0) as u64;
    if lambda_star <= 0.0 {
        return Ok(DiameterBound { chung: 1, log_ratio: 1 });
    }
    let nf = n as f64;
    let chung = if n == 2 { 1 } else { ceil((nf - 1.0).ln() / (d_prime / lambda_star).ln()) };
    let beta = lambda_star / d_prime;
    let log_ratio = ceil(2.0 * nf.log2() / (1.0 / beta).log2());
    Ok(DiameterBound { chung, log_ratio })
}

/// Maximum BFS eccentricity on the unweighted support.
pub fn exact_diameter(g: &WeightedGraph) -> Result<usize> {
    let mut diam = 0;
    for v in 0..g.num_vertices() {
        let d = g.bfs_distances(v);
        let ecc = *d.iter().max().unwrap_or(&0);
        if ecc == usize::MAX {
            return Err(Error::Disconnected);
        }
        diam = diam.max(ecc);
    }
    Ok(diam)
}

/// Edge-expansion lower bound `(d' - lambda2) / 2`.
pub fn cheeger_lower_bound(d_prime: f64, lambda2: f64) -> f64 {
    (d_prime - lambda2) / 2.0
}

/// Routing-depth bound for a Ramanujan (d, r)-regular hypergraph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingBound {
    pub value: f64,
    /// Multiplier of `log2 N`.
    pub coefficient: f64,
}

/// `(4 (d'+6) / (d' log2(1/beta)) + 19) log2 N` with `beta` from [`lambda_star_bound`].
pub fn tight_routing_bound(d: usize, r: usize, n: usize) -> Result<RoutingBound> {
    if n < 16 {
        return param(format!("bound stated for N >= 16, got {n}"));
    }
    let coefficient = tight_routing_coefficient(d, r)?;
    Ok(RoutingBound { value: coefficient * (n as f64).log2(), coefficient })
}

pub fn tight_routing_coefficient(d: usize, r: usize) -> Result<f64> {
    let b = lambda_star_bound(d, r)?;
    let dp = (d * (r - 1)) as f64;
    Ok(4.0 * (dp + 6.0) / (dp * (1.0 / b.beta).log2()) + 19.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_grid_hypergraph, build_projective_plane, build_random_regular_graph, clique_expansion, GridModel, GridSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn complete_graph_spectrum() {
        let s = spectrum(&WeightedGraph::complete(7)).unwrap();
        assert_abs_diff_eq!(s.lambda1, 6.0, epsilon = 1e-9);
        for &l in &s.eigenvalues[1..] {
            assert_abs_diff_eq!(l, -1.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(s.beta, 1.0 / 6.0, epsilon = 1e-12);
        assert!(s.ramanujan);
        assert_eq!(s.diameter_bound, Some(1));
    }

    #[test]
    fn cycle_spectrum() {
        let s = spectrum(&WeightedGraph::cycle(4)).unwrap();
        let expect = [2.0, 0.0, 0.0, -2.0];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        for seed in 0..3 {
            let g = build_random_regular_graph(300, 8, seed).unwrap();
            let a = spectrum(&g).unwrap();
            let b = spectrum_extreme(&g).unwrap();
            assert_abs_diff_eq!(a.lambda2, b.lambda2, epsilon = 1e-6);
            assert_abs_diff_eq!(a.lambda_n, b.lambda_n, epsilon = 1e-6);
        }
        let h = build_grid_hypergraph(&GridSpec::new(12, 3, GridModel::TwoD)).unwrap();
        let g = clique_expansion(&h).support();
        let a = spectrum(&g).unwrap();
        let b = spectrum_extreme(&g).unwrap();
        assert_abs_diff_eq!(a.beta, b.beta, epsilon = 1e-6);
    }

    #[test]
    fn ramanujan_hypergraph_checks() {
        let fano = build_projective_plane(2).unwrap();
        let s = spectrum(&clique_expansion(&fano)).unwrap();
        assert!(check_ramanujan_hypergraph(&fano, &s).unwrap());
        let grid = build_grid_hypergraph(&GridSpec::new(16, 3, GridModel::TwoD)).unwrap();
        let s = spectrum(&clique_expansion(&grid)).unwrap();
        assert!(!check_ramanujan_hypergraph(&grid, &s).unwrap());
        // boundary inclusive: (d, r) = (3, 3), band top at 1 + 4 = 5
        let mut edge = s.clone();
        edge.lambda2 = 5.0;
        edge.lambda_n = -3.0;
        assert!(check_ramanujan_hypergraph(&fano, &edge).unwrap());
    }

    #[test]
    fn complete_graphs_are_ramanujan() {
        for d in 2..9 {
            let s = spectrum(&WeightedGraph::complete(d + 1)).unwrap();
            assert!(check_ramanujan_graph(d as f64, &s));
        }
    }

    #[test]
    fn closed_forms() {
        let b = lambda_star_bound(3, 3).unwrap();
        assert_abs_diff_eq!(b.lambda_star, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.beta, 0.8333, epsilon = 1e-4);
        assert_abs_diff_eq!(lambda_star_bound(10, 5).unwrap().lambda_star, 15.0, epsilon = 1e-12);
        assert!(lambda_star_bound(2, 3).is_err());
        assert_eq!(diameter_bound(7, 6.0, 1.0).unwrap().chung, 1);
        assert_eq!(diameter_bound(64, 6.0, 5.0).unwrap().log_ratio, 46);
        let big = diameter_bound(1 << 20, 1.0, 0.9999).unwrap();
        assert!(big.log_ratio > 100_000);
        assert!(diameter_bound(10, 6.0, 6.0).is_err());
        assert_abs_diff_eq!(cheeger_lower_bound(6.0, -1.0), 3.5);
        assert_abs_diff_eq!(cheeger_lower_bound(6.0, 6.0), 0.0);
        assert!(tight_routing_bound(3, 3, 8).is_err());
        assert_eq!(tight_routing_coefficient(3, 3).unwrap().round(), 49.0);
    }

    #[test]
    fn exact_diameters() {
        assert_eq!(exact_diameter(&WeightedGraph::complete(7)).unwrap(), 1);
        assert_eq!(exact_diameter(&WeightedGraph::path(4)).unwrap(), 3);
        assert_eq!(exact_diameter(&WeightedGraph::empty(2)), Err(Error::Disconnected));
    }
}
