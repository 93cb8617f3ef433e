//! Immutable compressed-sparse-row graphs.
//!
//! A [`Graph`] is built once (from a file, a generator, or an edge list) and
//! is read-only afterwards, so any number of workers can traverse it without
//! synchronization. Vertex IDs are 32-bit; row offsets use `usize`.

mod generate;
mod io;

use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use generate::{gen_grid, gen_rmat, RMAT_PROBABILITIES};
pub use io::{load_edge_list, load_graph, load_matrix_market, parse_edge_list, parse_matrix_market};

/// Vertex identifier.
pub type VertexId = u32;

/// Errors raised while loading, generating or validating a graph.
#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed Matrix Market header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: index {index} out of declared bounds 1..={bound}")]
    IndexOutOfBounds { line: usize, index: u64, bound: u64 },
    #[error("line {line}: cannot parse {token:?}")]
    Parse { line: usize, token: String },
    #[error("line {line}: negative vertex id {token:?}")]
    NegativeId { line: usize, token: String },
    #[error("graph too large: {0}")]
    TooLarge(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed CSR: {0}")]
    Malformed(String),
    #[error("unknown graph source {0:?}")]
    UnknownSource(String),
}

/// Compressed-sparse-row adjacency structure.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    row_offsets: Vec<usize>,
    col_indices: Vec<VertexId>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("num_vertices", &self.num_vertices())
            .field("num_edges", &self.num_edges())
            .finish()
    }
}

impl Graph {
    /// Builds a graph from raw CSR arrays, checking every invariant.
    pub fn from_csr(row_offsets: Vec<usize>, col_indices: Vec<VertexId>) -> Result<Self, GraphError> {
        let g = Graph {
            row_offsets,
            col_indices,
        };
        g.validate()?;
        Ok(g)
    }

    /// Builds a simple directed graph over `num_vertices` vertices.
    ///
    /// Duplicate edges are dropped and each row is sorted; self-loops stay.
    pub fn from_edges(num_vertices: usize, mut edges: Vec<(VertexId, VertexId)>) -> Result<Self, GraphError> {
        if num_vertices > VertexId::MAX as usize {
            return Err(GraphError::TooLarge(format!("{num_vertices} vertices")));
        }
        if let Some(&(s, d)) = edges
            .iter()
            .find(|&&(s, d)| s as usize >= num_vertices || d as usize >= num_vertices)
        {
            return Err(GraphError::Malformed(format!(
                "edge ({s},{d}) outside vertex range 0..{num_vertices}"
            )));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut row_offsets = vec![0usize; num_vertices + 1];
        for &(s, _) in &edges {
            row_offsets[s as usize + 1] += 1;
        }
        for v in 0..num_vertices {
            row_offsets[v + 1] += row_offsets[v];
        }
        let col_indices = edges.into_iter().map(|(_, d)| d).collect();
        Ok(Graph {
            row_offsets,
            col_indices,
        })
    }

    pub fn empty() -> Self {
        Graph {
            row_offsets: vec![0],
            col_indices: Vec::new(),
        }
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.row_offsets.len() - 1
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[VertexId] {
        &self.col_indices
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    #[inline]
    pub fn edge_range(&self, v: VertexId) -> Range<usize> {
        let v = v as usize;
        self.row_offsets[v]..self.row_offsets[v + 1]
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.col_indices[self.edge_range(v)]
    }

    /// `idx`-th neighbor of `v` (`idx < degree(v)`).
    #[inline]
    pub fn neighbor(&self, v: VertexId, idx: usize) -> VertexId {
        self.col_indices[self.row_offsets[v as usize] + idx]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices())
            .map(|v| self.row_offsets[v + 1] - self.row_offsets[v])
            .max()
            .unwrap_or(0)
    }

    pub fn average_degree(&self) -> f64 {
        if self.num_vertices() == 0 {
            0.0
        } else {
            self.num_edges() as f64 / self.num_vertices() as f64
        }
    }

    pub fn max_in_degree(&self) -> usize {
        let mut indeg = vec![0usize; self.num_vertices()];
        for &d in &self.col_indices {
            indeg[d as usize] += 1;
        }
        indeg.into_iter().max().unwrap_or(0)
    }

    /// Sorted out-degree sequence.
    pub fn degree_multiset(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.num_vertices() as VertexId).map(|v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }

    pub fn has_edge(&self, src: VertexId, dst: VertexId) -> bool {
        self.neighbors(src).binary_search(&dst).is_ok()
    }

    /// True when every edge `(u,v)` has its reverse `(v,u)`.
    pub fn is_symmetric(&self) -> bool {
        (0..self.num_vertices() as VertexId).all(|u| self.neighbors(u).iter().all(|&v| self.has_edge(v, u)))
    }

    /// Adds the reverse of every edge.
    pub fn symmetrize(&self) -> Graph {
        let mut edges = Vec::with_capacity(2 * self.num_edges());
        for u in 0..self.num_vertices() as VertexId {
            for &v in self.neighbors(u) {
                edges.push((u, v));
                edges.push((v, u));
            }
        }
        Graph::from_edges(self.num_vertices(), edges).expect("symmetrized edges stay in range")
    }

    /// Checks every CSR invariant.
    pub fn validate(&self) -> Result<(), GraphError> {
        let ro = &self.row_offsets;
        if ro.is_empty() {
            return Err(GraphError::Malformed("row_offsets is empty".into()));
        }
        if ro[0] != 0 {
            return Err(GraphError::Malformed(format!("row_offsets[0] = {}", ro[0])));
        }
        if let Some(i) = ro.windows(2).position(|w| w[1] < w[0]) {
            return Err(GraphError::Malformed(format!("row_offsets decreases at {i}")));
        }
        if ro[ro.len() - 1] != self.col_indices.len() {
            return Err(GraphError::Malformed(format!(
                "row_offsets[|V|] = {} but |E| = {}",
                ro[ro.len() - 1],
                self.col_indices.len()
            )));
        }
        let n = self.num_vertices();
        if n > VertexId::MAX as usize {
            return Err(GraphError::TooLarge(format!("{n} vertices")));
        }
        if let Some(&v) = self.col_indices.iter().find(|&&v| v as usize >= n) {
            return Err(GraphError::Malformed(format!("neighbor {v} outside 0..{n}")));
        }
        Ok(())
    }

    /// Hop distances from `source` by a serial FIFO traversal;
    /// unreachable vertices get `u32::MAX`.
    pub fn bfs_distances(&self, source: VertexId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.num_vertices()];
        let mut queue = VecDeque::new();
        dist[source as usize] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let next = dist[v as usize] + 1;
            for &u in self.neighbors(v) {
                if dist[u as usize] == u32::MAX {
                    dist[u as usize] = next;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Largest finite hop distance from `source`.
    pub fn eccentricity(&self, source: VertexId) -> u32 {
        self.bfs_distances(source)
            .into_iter()
            .filter(|&d| d != u32::MAX)
            .max()
            .unwrap_or(0)
    }

    /// Lower bound on the diameter by repeated double sweeps.
    pub fn pseudo_diameter(&self, sweeps: usize) -> u32 {
        if self.num_vertices() == 0 {
            return 0;
        }
        let mut best = 0;
        let mut start: VertexId = 0;
        for _ in 0..sweeps.max(1) {
            let dist = self.bfs_distances(start);
            let (far, d) = dist
                .iter()
                .enumerate()
                .filter(|(_, &d)| d != u32::MAX)
                .max_by_key(|(_, &d)| d)
                .map(|(v, &d)| (v as VertexId, d))
                .unwrap_or((start, 0));
            if d <= best && far == start {
                break;
            }
            best = best.max(d);
            start = far;
        }
        best
    }

    /// Exclusive prefix sum of the degrees of `vertices`.
    pub fn prefix_degrees(&self, vertices: &[VertexId]) -> Vec<usize> {
        exclusive_prefix_sum(vertices.iter().map(|&v| self.degree(v)))
    }

    /// Relabels vertices under a uniformly random bijection drawn from `seed`.
    pub fn permute_ids(&self, seed: u64) -> (Graph, Permutation) {
        let perm = Permutation::random(self.num_vertices(), seed);
        (self.apply_permutation(&perm), perm)
    }

    /// Graph with every vertex `v` renamed to `perm.forward[v]`.
    pub fn apply_permutation(&self, perm: &Permutation) -> Graph {
        assert_eq!(perm.len(), self.num_vertices(), "permutation size mismatch");
        let n = self.num_vertices();
        let mut row_offsets = vec![0usize; n + 1];
        for old in 0..n as VertexId {
            row_offsets[perm.forward[old as usize] as usize + 1] = self.degree(old);
        }
        for v in 0..n {
            row_offsets[v + 1] += row_offsets[v];
        }
        let mut col_indices = vec![0; self.num_edges()];
        for old in 0..n as VertexId {
            let new = perm.forward[old as usize] as usize;
            let row = &mut col_indices[row_offsets[new]..row_offsets[new + 1]];
            for (slot, &u) in row.iter_mut().zip(self.neighbors(old)) {
                *slot = perm.forward[u as usize];
            }
            row.sort_unstable();
        }
        Graph {
            row_offsets,
            col_indices,
        }
    }
}

/// `[0, a0, a0+a1, ...]`; the last entry is the total.
pub fn exclusive_prefix_sum(values: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let values = values.into_iter();
    let mut out = Vec::with_capacity(values.size_hint().0 + 1);
    let mut acc = 0usize;
    out.push(0);
    for x in values {
        acc += x;
        out.push(acc);
    }
    out
}

/// A bijection on `0..n` with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    pub forward: Vec<VertexId>,
    pub inverse: Vec<VertexId>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let forward: Vec<VertexId> = (0..n as VertexId).collect();
        Permutation {
            inverse: forward.clone(),
            forward,
        }
    }

    pub fn random(n: usize, seed: u64) -> Self {
        let mut forward: Vec<VertexId> = (0..n as VertexId).collect();
        forward.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::from_forward(forward)
    }

    /// Panics if `forward` is not a bijection.
    pub fn from_forward(forward: Vec<VertexId>) -> Self {
        let mut inverse = vec![VertexId::MAX; forward.len()];
        for (old, &new) in forward.iter().enumerate() {
            assert!(
                inverse[new as usize] == VertexId::MAX,
                "not a bijection: {new} appears twice"
            );
            inverse[new as usize] = old as VertexId;
        }
        Permutation { forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn inverted(&self) -> Permutation {
        Permutation {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }
}
