use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Symmetric graph with positive integer edge weights and no self-loops.
///
/// Neighbour lists are sorted by vertex index, which makes every traversal
/// (and therefore every canonical path) deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<Vec<(usize, u32)>>,
}

impl WeightedGraph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        Self { n, adj: vec![Vec::new(); n] }
    }

    /// Build from weighted edges; repeated pairs accumulate their weights.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u32)>,
    {
        let mut pairs: Vec<(usize, usize, u32)> = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return param(format!("edge ({u},{v}) out of range for {n} vertices"));
            }
            if u == v {
                return param(format!("self-loop at vertex {u}"));
            }
            if w > 0 {
                pairs.push((u.min(v), u.max(v), w));
            }
        }
        pairs.sort_unstable_by_key(|&(u, v, _)| (u, v));
        let mut adj = vec![Vec::new(); n];
        let mut i = 0;
        while i < pairs.len() {
            let (u, v, mut w) = pairs[i];
            let mut j = i + 1;
            while j < pairs.len() && pairs[j].0 == u && pairs[j].1 == v {
                w += pairs[j].2;
                j += 1;
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
            i = j;
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        Ok(Self { n, adj })
    }

    /// Build from unit-weight edges.
    pub fn from_unit_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges(n, edges.into_iter().map(|(u, v)| (u, v, 1)))
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    /// Neighbours of `v` with edge weights, ascending by index.
    pub fn neighbors(&self, v: usize) -> &[(usize, u32)] {
        &self.adj[v]
    }

    pub fn weight(&self, u: usize, v: usize) -> u32 {
        self.adj[u].binary_search_by_key(&v, |&(x, _)| x).map(|i| self.adj[u][i].1).unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v) > 0
    }

    /// Sum of incident weights.
    pub fn weighted_degree(&self, v: usize) -> u64 {
        self.adj[v].iter().map(|&(_, w)| w as u64).sum()
    }

    /// Number of distinct neighbours.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Number of distinct unordered adjacent pairs.
    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Unordered edges `(u, v, w)` with `u < v`, lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| list.iter().filter(move |&&(v, _)| v > u).map(move |&(v, w)| (u, v, w)))
    }

    /// Common weighted degree, if every vertex has the same one.
    pub fn regular_degree(&self) -> Option<u64> {
        let d = self.weighted_degree(0);
        (0..self.n).all(|v| self.weighted_degree(v) == d).then_some(d)
    }

    pub fn max_weighted_degree(&self) -> u64 {
        (0..self.n).map(|v| self.weighted_degree(v)).max().unwrap_or(0)
    }

    /// Same edges, all weights set to one.
    pub fn support(&self) -> WeightedGraph {
        WeightedGraph { n: self.n, adj: self.adj.iter().map(|l| l.iter().map(|&(v, _)| (v, 1)).collect()).collect() }
    }

    /// Dense adjacency matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (u, list) in self.adj.iter().enumerate() {
            for &(v, w) in list {
                m[(u, v)] = w as f64;
            }
        }
        m
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (u, list) in self.adj.iter().enumerate() {
            y[u] = list.iter().map(|&(v, w)| w as f64 * x[v]).sum();
        }
    }

    /// Hop distances from `src` on the unweighted support (`usize::MAX` if unreachable).
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.bfs_distances(0).iter().all(|&d| d != usize::MAX)
    }

    /// Sum of squared weights over unordered edges.
    pub fn sum_squared_weights(&self) -> u64 {
        self.edges().map(|(_, _, w)| (w as u64) * (w as u64)).sum()
    }

    /// Multiply every weight by `factor`.
    pub fn scaled(&self, factor: u32) -> Result<WeightedGraph> {
        if factor == 0 {
            return Err(Error::Parameter("scale factor must be positive".into()));
        }
        Ok(WeightedGraph { n: self.n, adj: self.adj.iter().map(|l| l.iter().map(|&(v, w)| (v, w * factor)).collect()).collect() })
    }

    /// Complete graph with unit weights.
    pub fn complete(n: usize) -> WeightedGraph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::from_unit_edges(n, edges).expect("complete graph edges are valid")
    }

    /// Cycle `C_n` (n >= 3).
    pub fn cycle(n: usize) -> WeightedGraph {
        Self::from_unit_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }

    /// Path `P_n`.
    pub fn path(n: usize) -> WeightedGraph {
        Self::from_unit_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_edges_accumulate() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1), (1, 0, 2), (1, 2, 1)]).unwrap();
        assert_eq!(g.weight(0, 1), 3);
        assert_eq!(g.weight(1, 0), 3);
        assert_eq!(g.weighted_degree(1), 4);
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn rejects_loops_and_out_of_range() {
        assert!(WeightedGraph::from_edges(3, [(1, 1, 1)]).is_err());
        assert!(WeightedGraph::from_edges(3, [(1, 3, 1)]).is_err());
    }

    #[test]
    fn bfs_on_path() {
        let g = WeightedGraph::path(4);
        assert_eq!(g.bfs_distances(0), vec![0, 1, 2, 3]);
        assert!(g.is_connected());
        assert!(!WeightedGraph::empty(2).is_connected());
    }
}
