//! Weighted undirected graphs, Laplacians, synthetic generators and
//! edge-list I/O.

mod generators;
mod io;

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::CsrMatrix;

pub use generators::{
    random_bipartite_graph, random_sensor_graph, swiss_roll_graph, MAX_REGENERATIONS,
};
pub use io::{load_edge_list, parse_edge_list, save_edge_list, write_edge_list, LoadedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `D - W`
    Combinatorial,
    /// `I - D^{-1/2} W D^{-1/2}`
    Normalized,
}

/// Weighted undirected graph without self-loops.
///
/// Adjacency is stored as sorted per-vertex neighbor lists; `W[i][j]` is
/// present in both `i`'s and `j`'s list with the same weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<(usize, f64)>>,
    coords: Option<Vec<Vec<f64>>>,
}

impl Graph {
    /// Builds a graph from undirected edges `(u, v, w)`. Repeated edges keep
    /// the last weight.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            upsert(&mut adj[u], v, w);
            upsert(&mut adj[v], u, w);
        }
        for row in adj.iter_mut() {
            row.retain(|&(_, w)| w > 0.0);
            row.sort_by_key(|&(j, _)| j);
        }
        Ok(Graph { adj, coords: None })
    }

    /// Builds a graph from a dense adjacency matrix, validating symmetry,
    /// non-negativity and the zero diagonal exactly.
    pub fn from_dense(w: &DMatrix<f64>) -> Result<Self> {
        let n = linalg::ensure_square(w)?;
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = w[(i, j)];
                if v != w[(j, i)] {
                    return Err(Error::NotSymmetric {
                        asymmetry: (v - w[(j, i)]).abs(),
                    });
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidGraph(format!(
                        "invalid weight {v} at ({i}, {j})"
                    )));
                }
                if v > 0.0 {
                    adj[i].push((j, v));
                }
            }
        }
        Ok(Graph { adj, coords: None })
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.n() {
            return Err(Error::InvalidGraph(format!(
                "{} coordinate rows for {} vertices",
                coords.len(),
                self.n()
            )));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.adj[i].binary_search_by_key(&j, |&(k, _)| k) {
            Ok(pos) => self.adj[i][pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| v > u)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut w = DMatrix::zeros(n, n);
        for (i, row) in self.adj.iter().enumerate() {
            for &(j, v) in row {
                w[(i, j)] = v;
            }
        }
        w
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Dense Laplacian of the requested kind.
    pub fn laplacian(&self, kind: LaplacianKind) -> Result<DMatrix<f64>> {
        Ok(self.laplacian_sparse(kind)?.to_dense())
    }

    /// Sparse Laplacian, for matrix-free filtering.
    pub fn laplacian_sparse(&self, kind: LaplacianKind) -> Result<CsrMatrix> {
        let deg = self.degrees();
        let scale: Vec<f64> = match kind {
            LaplacianKind::Combinatorial => vec![1.0; self.n()],
            LaplacianKind::Normalized => deg
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    if d > 0.0 {
                        Ok(1.0 / d.sqrt())
                    } else {
                        Err(Error::DegenerateDegree { vertex: i })
                    }
                })
                .collect::<Result<_>>()?,
        };
        let rows: Vec<Vec<(usize, f64)>> = self
            .adj
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                let diag = match kind {
                    LaplacianKind::Combinatorial => deg[i],
                    LaplacianKind::Normalized => 1.0,
                };
                let mut row = Vec::with_capacity(nbrs.len() + 1);
                let mut placed = false;
                for &(j, w) in nbrs {
                    if !placed && j > i {
                        row.push((i, diag));
                        placed = true;
                    }
                    row.push((j, -w * scale[i] * scale[j]));
                }
                if !placed {
                    row.push((i, diag));
                }
                row
            })
            .collect();
        Ok(CsrMatrix::from_rows(&rows))
    }
}

fn upsert(row: &mut Vec<(usize, f64)>, j: usize, w: f64) {
    match row.iter_mut().find(|(k, _)| *k == j) {
        Some(slot) => slot.1 = w,
        None => row.push((j, w)),
    }
}

/// Two-coloring of a bipartite graph: every edge joins `low` and `high`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartitePartition {
    low: Vec<usize>,
    high: Vec<usize>,
}

impl BipartitePartition {
    /// Validates that the sets partition the vertex set and that no edge
    /// stays inside one side.
    pub fn new(g: &Graph, mut low: Vec<usize>, mut high: Vec<usize>) -> Result<Self> {
        let n = g.n();
        let mut side = vec![None; n];
        low.sort_unstable();
        high.sort_unstable();
        for (set, label) in [(&low, 0u8), (&high, 1u8)] {
            for &v in set.iter() {
                if v >= n {
                    return Err(Error::Bipartite(format!("vertex {v} out of range")));
                }
                if side[v].is_some() {
                    return Err(Error::Bipartite(format!("vertex {v} listed twice")));
                }
                side[v] = Some(label);
            }
        }
        if let Some(v) = side.iter().position(Option::is_none) {
            return Err(Error::Bipartite(format!(
                "vertex {v} missing from partition"
            )));
        }
        for (u, v, _) in g.edges() {
            if side[u] == side[v] {
                return Err(Error::Bipartite(format!(
                    "edge ({u}, {v}) lies inside one side"
                )));
            }
        }
        Ok(BipartitePartition { low, high })
    }

    pub fn low(&self) -> &[usize] {
        &self.low
    }

    pub fn high(&self) -> &[usize] {
        &self.high
    }
}
