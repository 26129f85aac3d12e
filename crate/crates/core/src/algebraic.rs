//! Cayley graphs on `Z_n^2`: character spectra, the abelian spectral barrier
//! and affine choices of the Valiant intermediate permutation.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::graphs::{build_cayley_graph, symmetric_generating_set, WeightedGraph};
use crate::rng::{derive_seed, rng_from_seed, substream};
use crate::route::{paths_for_sigma, random_permutations, valiant_paths, PathOracle, PathSet, SigmaStrategy};
use crate::spectral::{summary_for_regular_spectrum, SpectralSummary};
use crate::stats::{median, median_usize};

/// Named generator recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `(x, x² mod p)` for `x = 1..=d`, `p` prime.
    Qr,
    /// `(1,0), (0,1), (1,1), (1,−1)`; degree 8 only.
    Margulis,
    /// `d` distinct `±` classes drawn uniformly from the nonzero elements.
    Random(u64),
}

/// A degree-`degree` Cayley graph recipe on `Z_n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorFamily {
    pub kind: FamilyKind,
    pub n: usize,
    /// Even degree `2d`.
    pub degree: usize,
}

impl GeneratorFamily {
    pub fn new(kind: FamilyKind, n: usize, degree: usize) -> Result<Self> {
        if degree < 2 || degree % 2 == 1 {
            return param(format!("degree {degree} must be even and at least 2"));
        }
        if n < 3 {
            return param(format!("modulus n={n} must be at least 3"));
        }
        let pairs = degree / 2;
        match kind {
            FamilyKind::Qr if !is_prime(n) => return param(format!("QR generators need a prime modulus, got {n}")),
            FamilyKind::Qr if pairs >= n => return param("too many QR generators for this modulus"),
            FamilyKind::Margulis if degree != 8 => return param("Margulis generators have degree 8"),
            FamilyKind::Random(_) if pairs > (n * n - 1) / 2 => return param("not enough distinct generators"),
            _ => {}
        }
        Ok(Self { kind, n, degree })
    }

    pub fn name(&self) -> String {
        match self.kind {
            FamilyKind::Qr => "qr".into(),
            FamilyKind::Margulis => "margulis".into(),
            FamilyKind::Random(seed) => format!("random({seed})"),
        }
    }

    /// One generator per `±` pair.
    pub fn generators(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        let pairs = self.degree / 2;
        match self.kind {
            FamilyKind::Qr => (1..=pairs).map(|x| (x % n, x * x % n)).collect(),
            FamilyKind::Margulis => vec![(1, 0), (0, 1), (1, 1), (1, n - 1)],
            FamilyKind::Random(seed) => {
                let mut rng = substream(seed, "cayley-generators", n as u64);
                let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(pairs);
                while chosen.len() < pairs {
                    let g = (rng.random_range(0..n), rng.random_range(0..n));
                    let neg = ((n - g.0) % n, (n - g.1) % n);
                    if g != (0, 0) && !chosen.contains(&g) && !chosen.contains(&neg) {
                        chosen.push(g);
                    }
                }
                chosen
            }
        }
    }

    pub fn graph(&self) -> Result<WeightedGraph> {
        build_cayley_graph(self.n, &self.generators())
    }

    pub fn spectrum(&self) -> Result<SpectralSummary> {
        cayley_spectrum_characters(self.n, &self.generators())
    }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// All `n²` adjacency eigenvalues of the Cayley graph, indexed by character
/// `(a, b)` at position `a n + b`: `λ_(a,b) = Σ_{s ∈ S ∪ −S} cos(2π(a s₁ + b s₂)/n)`.
pub fn character_eigenvalues(n: usize, generators: &[(usize, usize)]) -> Result<Vec<f64>> {
    let set = symmetric_generating_set(n, generators)?;
    let cos: Vec<f64> = (0..n).map(|k| (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
    Ok((0..n * n)
        .map(|v| {
            let (a, b) = (v / n, v % n);
            set.iter().map(|&(s1, s2)| cos[(a * s1 + b * s2) % n]).sum()
        })
        .collect())
}

/// Spectral summary from the character formula; no eigensolve.
pub fn cayley_spectrum_characters(n: usize, generators: &[(usize, usize)]) -> Result<SpectralSummary> {
    let degree = symmetric_generating_set(n, generators)?.len();
    Ok(summary_for_regular_spectrum(degree as f64, character_eigenvalues(n, generators)?))
}

/// One modulus of the abelian barrier scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    pub family: String,
    pub n: usize,
    pub lambda2: f64,
    pub lambda_star: f64,
    /// `λ₂ / degree`.
    pub beta: f64,
    /// `λ* / (2√(degree − 1))`; above 1 means not Ramanujan.
    pub ramanujan_ratio: f64,
    pub ramanujan: bool,
}

fn barrier_row(family: &GeneratorFamily) -> Result<BarrierRow> {
    let s = family.spectrum()?;
    let bound = 2.0 * (s.d_prime - 1.0).sqrt();
    Ok(BarrierRow {
        family: family.name(),
        n: family.n,
        lambda2: s.lambda2,
        lambda_star: s.lambda_star,
        beta: s.lambda2 / s.d_prime,
        ramanujan_ratio: s.lambda_star / bound,
        ramanujan: s.ramanujan,
    })
}

/// Number of generator draws summarised per modulus for the random family.
pub const RANDOM_FAMILY_DRAWS: u64 = 101;

/// Spectral ratios of a family across moduli.
///
/// For [`FamilyKind::Random`] each row reports medians of `λ₂`, `λ*` and the
/// ratios over [`RANDOM_FAMILY_DRAWS`] generator draws seeded from the family
/// seed; the Ramanujan flag then records whether any draw was Ramanujan.
pub fn abelian_barrier_scan(kind: FamilyKind, degree: usize, moduli: &[usize]) -> Result<Vec<BarrierRow>> {
    moduli
        .iter()
        .map(|&n| match kind {
            FamilyKind::Random(seed) => {
                let rows = (0..RANDOM_FAMILY_DRAWS)
                    .map(|i| {
                        let f = GeneratorFamily::new(FamilyKind::Random(derive_seed(seed, "draw", i)), n, degree)?;
                        barrier_row(&f)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let med = |f: fn(&BarrierRow) -> f64| median(&rows.iter().map(f).collect::<Vec<_>>());
                Ok(BarrierRow {
                    family: format!("random({seed})"),
                    n,
                    lambda2: med(|r| r.lambda2),
                    lambda_star: med(|r| r.lambda_star),
                    beta: med(|r| r.beta),
                    ramanujan_ratio: med(|r| r.ramanujan_ratio),
                    ramanujan: rows.iter().any(|r| r.ramanujan),
                })
            }
            _ => barrier_row(&GeneratorFamily::new(kind, n, degree)?),
        })
        .collect()
}

/// Smallest `λ*` over every set of `pairs` distinct `±` generator classes of
/// `Z_n^2` (odd `n`), with a minimiser.
pub fn min_lambda_star_exhaustive(n: usize, pairs: usize) -> Result<(f64, Vec<(usize, usize)>)> {
    if n.is_multiple_of(2) || n < 3 {
        return param("exhaustive scan needs an odd modulus");
    }
    // one representative per ± class: the lexicographically smaller element
    let classes: Vec<(usize, usize)> = (1..n * n).map(|v| (v / n, v % n)).filter(|&g| g < ((n - g.0) % n, (n - g.1) % n)).collect();
    if pairs == 0 || pairs > classes.len() {
        return param("invalid number of generator pairs");
    }
    let cos: Vec<f64> = (0..n).map(|k| 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
    // contribution of class j to the nontrivial character v
    let table: Vec<Vec<f64>> = classes.iter().map(|&(s1, s2)| (1..n * n).map(|v| cos[((v / n) * s1 + (v % n) * s2) % n]).collect()).collect();
    let chars = n * n - 1;
    let mut best = (f64::INFINITY, Vec::new());
    let mut idx: Vec<usize> = (0..pairs).collect();
    let mut acc = vec![0.0; chars];
    loop {
        acc.iter_mut().for_each(|x| *x = 0.0);
        for &j in &idx {
            for (a, t) in acc.iter_mut().zip(&table[j]) {
                *a += t;
            }
        }
        let ls = acc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if ls < best.0 {
            best = (ls, idx.iter().map(|&j| classes[j]).collect());
        }
        // next combination
        let mut i = pairs;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if idx[i] < classes.len() - pairs + i {
                idx[i] += 1;
                for k in i + 1..pairs {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A Cayley graph on `Z_n^2` with its path oracle.
#[derive(Debug, Clone)]
pub struct CayleyHost {
    pub n: usize,
    pub oracle: PathOracle,
}

impl CayleyHost {
    pub fn new(n: usize, generators: &[(usize, usize)]) -> Result<Self> {
        Ok(Self { n, oracle: PathOracle::new(&build_cayley_graph(n, generators)?)? })
    }

    /// Accept `g` as a Cayley graph on `Z_n^2` (vertex `(a, b)` at `a n + b`)
    /// after checking that every vertex's neighbourhood is the translate of
    /// vertex 0's.
    pub fn from_graph(g: &WeightedGraph, n: usize) -> Result<Self> {
        if g.num_vertices() != n * n {
            return param(format!("host has {} vertices, expected n²={}", g.num_vertices(), n * n));
        }
        let base: Vec<(usize, usize)> = g.neighbors(0).iter().map(|&(w, _)| (w / n, w % n)).collect();
        for v in 0..n * n {
            let (a, b) = (v / n, v % n);
            let mut expect: Vec<usize> = base.iter().map(|&(s1, s2)| ((a + s1) % n) * n + (b + s2) % n).collect();
            expect.sort_unstable();
            let got: Vec<usize> = g.neighbors(v).iter().map(|&(w, _)| w).collect();
            if got != expect {
                return param("host is not a Cayley graph on Z_n^2");
            }
        }
        Ok(Self { n, oracle: PathOracle::new(g)? })
    }
}

/// Invertible 2×2 matrix over `Z_n` and a shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: [[usize; 2]; 2],
    pub c: (usize, usize),
}

impl AffineMap {
    pub fn translation(c: (usize, usize)) -> Self {
        Self { a: [[1, 0], [0, 1]], c }
    }

    /// `σ(v) = A v + c` on vertex indices `a n + b`.
    pub fn sigma(&self, n: usize) -> Vec<usize> {
        (0..n * n)
            .map(|v| {
                let (x, y) = (v / n, v % n);
                let x2 = (self.a[0][0] * x + self.a[0][1] * y + self.c.0) % n;
                let y2 = (self.a[1][0] * x + self.a[1][1] * y + self.c.1) % n;
                x2 * n + y2
            })
            .collect()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Search space for the intermediate permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AffineMode {
    /// All `n²` translations.
    Translation,
    /// `m` random invertible maps `A v + c`.
    Sampled { m: usize, seed: u64 },
}

/// Default number of sampled affine maps.
pub const DEFAULT_AFFINE_SAMPLES: usize = 200;

/// Best map found and its path set.
#[derive(Debug, Clone)]
pub struct AffineChoice {
    pub map: AffineMap,
    pub paths: PathSet,
}

/// Pick the intermediate permutation minimising the two-phase worst-edge
/// congestion; ties go to the smaller depth estimate, then to the earlier
/// candidate.
pub fn affine_sigma_search(host: &CayleyHost, pi: &[usize], mode: AffineMode) -> Result<AffineChoice> {
    let n = host.n;
    crate::route::validate_permutation(pi, n * n)?;
    let candidates: Vec<AffineMap> = match mode {
        AffineMode::Translation => (0..n * n).map(|v| AffineMap::translation((v / n, v % n))).collect(),
        AffineMode::Sampled { m, seed } => {
            let mut rng = rng_from_seed(seed);
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let a = [[rng.random_range(0..n), rng.random_range(0..n)], [rng.random_range(0..n), rng.random_range(0..n)]];
                let det = (a[0][0] * a[1][1] + n * n - (a[0][1] * a[1][0]) % n) % n;
                if gcd(det, n) == 1 {
                    out.push(AffineMap { a, c: (rng.random_range(0..n), rng.random_range(0..n)) });
                }
            }
            out
        }
    };
    if candidates.is_empty() {
        return param("no candidate maps");
    }
    let mut best: Option<AffineChoice> = None;
    for map in candidates {
        let paths = paths_for_sigma(&host.oracle, pi, map.sigma(n));
        let key = (paths.congestion, paths.lmr_estimate());
        if best.as_ref().is_none_or(|b| key < (b.paths.congestion, b.paths.lmr_estimate())) {
            best = Some(AffineChoice { map, paths });
        }
    }
    Ok(best.expect("nonempty candidate list"))
}

/// Median depth estimates of three intermediate-permutation strategies over
/// the same random permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineComparison {
    pub n: usize,
    pub trials: usize,
    pub random_median: f64,
    pub affine_median: f64,
    pub translation_median: f64,
    /// `1 − affine / random`.
    pub affine_improvement: f64,
    /// `1 − translation / random`.
    pub translation_improvement: f64,
}

pub fn affine_comparison(host: &CayleyHost, trials: usize, samples: usize, seed: u64) -> Result<AffineComparison> {
    let n = host.n;
    let perms = random_permutations(n * n, trials, derive_seed(seed, "affine-pi", 0));
    let (mut rnd, mut aff, mut tr) = (Vec::new(), Vec::new(), Vec::new());
    for (t, pi) in perms.iter().enumerate() {
        let t = t as u64;
        rnd.push(valiant_paths(&host.oracle, pi, &SigmaStrategy::Uniform, derive_seed(seed, "sigma", t))?.lmr_estimate());
        let sampled = AffineMode::Sampled { m: samples, seed: derive_seed(seed, "affine-maps", t) };
        aff.push(affine_sigma_search(host, pi, sampled)?.paths.lmr_estimate());
        tr.push(affine_sigma_search(host, pi, AffineMode::Translation)?.paths.lmr_estimate());
    }
    let (r, a, c) = (median_usize(&rnd), median_usize(&aff), median_usize(&tr));
    Ok(AffineComparison {
        n,
        trials,
        random_median: r,
        affine_median: a,
        translation_median: c,
        affine_improvement: 1.0 - a / r,
        translation_improvement: 1.0 - c / r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectrum;

    #[test]
    fn torus_characters() {
        let ev = character_eigenvalues(4, &[(1, 0), (0, 1)]).unwrap();
        assert!((ev[2 * 4 + 2] + 4.0).abs() < 1e-12);
        assert!((ev[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn characters_match_dense() {
        for kind in [FamilyKind::Qr, FamilyKind::Margulis, FamilyKind::Random(3)] {
            let f = GeneratorFamily::new(kind, 7, 8).unwrap();
            let mut a = character_eigenvalues(7, &f.generators()).unwrap();
            a.sort_by(|x, y| y.total_cmp(x));
            let b = spectrum(&f.graph().unwrap()).unwrap().eigenvalues;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6, "{kind:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn family_validation() {
        assert!(GeneratorFamily::new(FamilyKind::Qr, 9, 8).is_err());
        assert!(GeneratorFamily::new(FamilyKind::Margulis, 9, 6).is_err());
        assert!(GeneratorFamily::new(FamilyKind::Qr, 7, 7).is_err());
        assert_eq!(GeneratorFamily::new(FamilyKind::Qr, 7, 8).unwrap().generators(), vec![(1, 1), (2, 4), (3, 2), (4, 2)]);
    }

    #[test]
    fn translations_equalise_scatter_lengths() {
        let host = CayleyHost::new(7, &GeneratorFamily::new(FamilyKind::Qr, 7, 8).unwrap().generators()).unwrap();
        let pi = random_permutations(49, 1, 5).remove(0);
        for c in [(0, 1), (3, 5), (6, 6)] {
            let ps = paths_for_sigma(&host.oracle, &pi, AffineMap::translation(c).sigma(7));
            let lens: Vec<usize> = ps.scatter.iter().map(|p| p.len() - 1).collect();
            assert!(lens.iter().all(|&l| l == lens[0]));
            assert_eq!(lens[0], host.oracle.distance(0, c.0 * 7 + c.1));
        }
    }

    #[test]
    fn identity_picks_zero_shift() {
        let host = CayleyHost::new(5, &[(1, 0), (0, 1)]).unwrap();
        let id: Vec<usize> = (0..25).collect();
        let best = affine_sigma_search(&host, &id, AffineMode::Translation).unwrap();
        assert_eq!(best.map.c, (0, 0));
        assert_eq!(best.paths.lmr_estimate(), 0);
    }

    #[test]
    fn non_cayley_host_rejected() {
        let g = WeightedGraph::path(9);
        assert!(CayleyHost::from_graph(&g, 3).is_err());
        let torus = build_cayley_graph(3, &[(1, 0), (0, 1)]).unwrap();
        assert!(CayleyHost::from_graph(&torus, 3).is_ok());
    }

    #[test]
    fn sampled_maps_are_invertible() {
        let host = CayleyHost::new(7, &[(1, 0), (0, 1), (1, 1), (1, 6)]).unwrap();
        let pi = random_permutations(49, 1, 9).remove(0);
        let best = affine_sigma_search(&host, &pi, AffineMode::Sampled { m: 20, seed: 1 }).unwrap();
        let mut s = best.map.sigma(7);
        s.sort_unstable();
        assert_eq!(s, (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn degree_eight_ramanujan_cayley_graph_exists_at_eleven() {
        let (best, gens) = min_lambda_star_exhaustive(11, 4).unwrap();
        let bound = 2.0 * 7f64.sqrt();
        assert!(best < bound, "{best}");
        let dense = spectrum(&build_cayley_graph(11, &gens).unwrap()).unwrap();
        assert!((dense.lambda_star - best).abs() < 1e-6);
        assert!(dense.ramanujan);
        for kind in [FamilyKind::Qr, FamilyKind::Margulis] {
            assert!(!abelian_barrier_scan(kind, 8, &[11]).unwrap()[0].ramanujan);
        }
    }
}
