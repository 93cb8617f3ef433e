use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError, VertexId};

/// Quadrant probabilities `(a, b, c, d)` of the recursive-matrix generator.
pub const RMAT_PROBABILITIES: (f64, f64, f64, f64) = (0.57, 0.19, 0.19, 0.05);

const MAX_RMAT_SCALE: u32 = 26;

/// 2-D lattice with a 4-neighborhood, edges in both directions.
///
/// Vertex `(r, c)` has ID `r * cols + c`.
pub fn gen_grid(rows: usize, cols: usize) -> Result<Graph, GraphError> {
    if rows == 0 || cols == 0 {
        return Err(GraphError::InvalidParameter(format!("grid {rows}x{cols} is empty")));
    }
    let n = rows
        .checked_mul(cols)
        .filter(|&n| n <= VertexId::MAX as usize)
        .ok_or_else(|| GraphError::TooLarge(format!("grid {rows}x{cols}")))?;
    let m = rows
        .checked_mul(cols - 1)
        .and_then(|h| cols.checked_mul(rows - 1).and_then(|v| h.checked_add(v)))
        .and_then(|x| x.checked_mul(2))
        .ok_or_else(|| GraphError::TooLarge(format!("grid {rows}x{cols} edges")))?;

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(m);
    row_offsets.push(0);
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            // ascending neighbor order: up, left, right, down
            if r > 0 {
                col_indices.push((id - cols) as VertexId);
            }
            if c > 0 {
                col_indices.push((id - 1) as VertexId);
            }
            if c + 1 < cols {
                col_indices.push((id + 1) as VertexId);
            }
            if r + 1 < rows {
                col_indices.push((id + cols) as VertexId);
            }
            row_offsets.push(col_indices.len());
        }
    }
    debug_assert_eq!(col_indices.len(), m);
    Graph::from_csr(row_offsets, col_indices)
}

/// Recursive-matrix random graph on `2^scale` vertices.
///
/// Draws `edge_factor * 2^scale` directed edges, then removes duplicates.
/// Self-loops are kept. Output is a pure function of the arguments.
pub fn gen_rmat(scale: u32, edge_factor: usize, seed: u64) -> Result<Graph, GraphError> {
    if scale > MAX_RMAT_SCALE {
        return Err(GraphError::InvalidParameter(format!(
            "rmat scale {scale} exceeds {MAX_RMAT_SCALE}"
        )));
    }
    let n = 1usize << scale;
    let m = n
        .checked_mul(edge_factor)
        .ok_or_else(|| GraphError::TooLarge(format!("rmat {scale}:{edge_factor}")))?;
    let (a, b, c, _) = RMAT_PROBABILITIES;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (mut src, mut dst) = (0usize, 0usize);
        for level in (0..scale).rev() {
            let p: f64 = rng.gen();
            let bit = 1usize << level;
            if p < a {
            } else if p < a + b {
                dst |= bit;
            } else if p < a + b + c {
                src |= bit;
            } else {
                src |= bit;
                dst |= bit;
            }
        }
        edges.push((src as VertexId, dst as VertexId));
    }
    Graph::from_edges(n, edges)
}
