//! Undirected weighted graphs and their combinatorial Laplacians.

mod generators;
mod io;

pub use generators::{
    community, erdos_renyi, ring, sbm, sbm_epsilon_c, sensor, sensor_default_threshold,
};
pub use io::{load_graph, save_graph, GraphFormat};

use sha2::{Digest, Sha256};

use crate::error::{FgftError, Result};
use crate::matrix::SymmetricMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected weighted graph on vertices `0..n`.
///
/// Edges are stored once per unordered pair with `i < j`, sorted
/// lexicographically, so two graphs with the same edge set compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Validates and canonicalizes an edge list. Pairs may be given in either
    /// orientation; self-loops, duplicates and non-positive weights are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(FgftError::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if a == b {
                return Err(FgftError::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(FgftError::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            out.push(Edge { i, j, w });
        }
        out.sort_by_key(|e| (e.i, e.j));
        if let Some(pair) = out
            .windows(2)
            .find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j))
        {
            return Err(FgftError::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                pair[0].i, pair[0].j
            )));
        }
        Ok(Self { n, edges: out })
    }

    pub(crate) fn from_sorted_unchecked(n: usize, edges: Vec<Edge>) -> Self {
        debug_assert!(edges
            .windows(2)
            .all(|p| (p[0].i, p[0].j) < (p[1].i, p[1].j)));
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.i] += e.w;
            d[e.j] += e.w;
        }
        d
    }

    /// Unweighted vertex degrees.
    pub fn neighbor_counts(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.i] += 1;
            d[e.j] += 1;
        }
        d
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees().into_iter().fold(0.0, f64::max)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }
}

/// Combinatorial Laplacian `L = D - W`.
pub fn laplacian(g: &Graph) -> SymmetricMatrix {
    let mut l = SymmetricMatrix::zeros(g.n());
    let mut degree = vec![0.0; g.n()];
    for e in g.edges() {
        l.set(e.i, e.j, -e.w);
        degree[e.i] += e.w;
        degree[e.j] += e.w;
    }
    for (i, d) in degree.into_iter().enumerate() {
        l.set(i, i, d);
    }
    l
}

/// SHA-256 of a matrix's dimension and row-major entries.
pub fn matrix_digest(m: &SymmetricMatrix) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((m.n() as u64).to_le_bytes());
    for v in m.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}
