use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// r-uniform hypergraph.
///
/// Hyperedges keep the vertex order they were built with. Set semantics apply
/// everywhere except voltage lifts, where the first and last listed vertices
/// are the shift anchors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    num_vertices: usize,
    r: usize,
    d: usize,
    regular: bool,
    hyperedges: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Validate and wrap a hyperedge list. `d` is the maximum vertex degree;
    /// the regular flag is set when all degrees agree.
    pub fn new(num_vertices: usize, r: usize, hyperedges: Vec<Vec<usize>>) -> Result<Self> {
        if r < 2 {
            return param(format!("uniformity r={r} must be at least 2"));
        }
        if num_vertices < r {
            return param(format!("N={num_vertices} must be at least r={r}"));
        }
        let mut deg = vec![0usize; num_vertices];
        for (i, e) in hyperedges.iter().enumerate() {
            if e.len() != r {
                return param(format!("hyperedge {i} has {} vertices, expected {r}", e.len()));
            }
            let mut s = e.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return param(format!("hyperedge {i} repeats a vertex"));
            }
            if s[r - 1] >= num_vertices {
                return param(format!("hyperedge {i} references vertex {}", s[r - 1]));
            }
            for &v in e {
                deg[v] += 1;
            }
        }
        let d = deg.iter().copied().max().unwrap_or(0);
        let regular = d >= 1 && deg.iter().all(|&x| x == d);
        Ok(Self { num_vertices, r, d, regular, hyperedges })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Vertex degree (maximum degree when not regular).
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_regular(&self) -> bool {
        self.regular
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn num_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices];
        for e in &self.hyperedges {
            for &v in e {
                deg[v] += 1;
            }
        }
        deg
    }
}

/// Grid hypergraph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridModel {
    /// Runs of r consecutive vertices along rows and columns.
    TwoD,
    /// `TwoD` plus both diagonal directions and stride-2 runs along rows and columns.
    ThreeD,
}

/// How runs behave at the edge of the array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Boundary {
    /// Runs wrap around (torus). Every vertex has the same degree.
    #[default]
    Periodic,
    /// Runs must fit inside the array; boundary vertices have lower degree.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub r: usize,
    pub model: GridModel,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(n: usize, r: usize, model: GridModel) -> Self {
        Self { n, r, model, boundary: Boundary::Periodic }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.n * self.n
    }
}

/// Rule for placing the shifted vertex when lifting a hyperedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LiftConvention {
    /// The first listed vertex moves to sheet `j + s`, the others stay on `j`.
    #[default]
    FirstVertex,
    /// The last listed vertex moves to sheet `j + s`.
    LastVertex,
    /// The i-th listed vertex (from 0) moves to sheet `j + i*s`.
    Rotation,
}

impl LiftConvention {
    pub const ALL: [LiftConvention; 3] = [LiftConvention::FirstVertex, LiftConvention::LastVertex, LiftConvention::Rotation];

    pub fn name(self) -> &'static str {
        match self {
            LiftConvention::FirstVertex => "first-vertex",
            LiftConvention::LastVertex => "last-vertex",
            LiftConvention::Rotation => "rotation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first-vertex" | "first" => Ok(Self::FirstVertex),
            "last-vertex" | "last" => Ok(Self::LastVertex),
            "rotation" => Ok(Self::Rotation),
            _ => param(format!("unknown lift convention '{s}'")),
        }
    }
}

/// `Z_k` voltages on the hyperedges of a base hypergraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoltageAssignment {
    pub base: Hypergraph,
    pub k: usize,
    pub voltages: Vec<usize>,
    pub convention: LiftConvention,
}

impl VoltageAssignment {
    pub fn new(base: Hypergraph, k: usize, voltages: Vec<usize>, convention: LiftConvention) -> Result<Self> {
        if k < 1 {
            return param("covering order k must be at least 1");
        }
        if voltages.len() != base.num_hyperedges() {
            return param(format!("{} voltages for {} hyperedges", voltages.len(), base.num_hyperedges()));
        }
        if let Some(&s) = voltages.iter().find(|&&s| s >= k) {
            return param(format!("voltage {s} outside Z_{k}"));
        }
        Ok(Self { base, k, voltages, convention })
    }

    /// Lifted index of base vertex `v` on `sheet`.
    pub fn lifted_index(&self, v: usize, sheet: usize) -> usize {
        sheet * self.base.num_vertices() + v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Hypergraph::new(3, 3, vec![vec![0, 1, 2]]).is_ok());
        assert!(Hypergraph::new(3, 3, vec![vec![0, 1, 1]]).is_err());
        assert!(Hypergraph::new(3, 3, vec![vec![0, 1]]).is_err());
        assert!(Hypergraph::new(3, 3, vec![vec![0, 1, 3]]).is_err());
        assert!(Hypergraph::new(2, 3, vec![]).is_err());
    }

    #[test]
    fn regular_flag() {
        let h = Hypergraph::new(4, 2, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert!(h.is_regular());
        assert_eq!(h.d(), 1);
        let h = Hypergraph::new(4, 2, vec![vec![0, 1], vec![1, 2]]).unwrap();
        assert!(!h.is_regular());
        assert_eq!(h.d(), 2);
    }

    #[test]
    fn voltage_validation() {
        let h = Hypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        assert!(VoltageAssignment::new(h.clone(), 2, vec![1], LiftConvention::FirstVertex).is_ok());
        assert!(VoltageAssignment::new(h.clone(), 2, vec![2], LiftConvention::FirstVertex).is_err());
        assert!(VoltageAssignment::new(h, 2, vec![0, 1], LiftConvention::FirstVertex).is_err());
    }
}
