use std::fs;
use std::path::Path;

use super::{gen_grid, gen_rmat, Graph, GraphError, VertexId};

fn read(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a Matrix Market coordinate file (1-based indices).
///
/// Symmetric, skew-symmetric and hermitian files emit both directions of
/// every off-diagonal entry. Values, when present, are ignored.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    parse_matrix_market(&read(path.as_ref())?)
}

pub fn parse_matrix_market(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| GraphError::MalformedHeader("empty file".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(GraphError::MalformedHeader(header.to_string()));
    }
    if fields[2] != "coordinate" {
        return Err(GraphError::MalformedHeader(format!(
            "only coordinate format is supported, got {:?}",
            fields[2]
        )));
    }
    if !matches!(
        fields[3].as_str(),
        "pattern" | "real" | "integer" | "complex" | "double"
    ) {
        return Err(GraphError::MalformedHeader(format!("unknown field {:?}", fields[3])));
    }
    let mirrored = match fields[4].as_str() {
        "general" => false,
        "symmetric" | "skew-symmetric" | "hermitian" => true,
        other => return Err(GraphError::MalformedHeader(format!("unknown symmetry {other:?}"))),
    };

    let mut size: Option<(u64, u64, u64)> = None;
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let next_index = |tok: &mut std::str::SplitWhitespace<'_>| -> Result<u64, GraphError> {
            let t = tok.next().ok_or_else(|| GraphError::Parse {
                line: lineno,
                token: line.to_string(),
            })?;
            t.parse::<u64>().map_err(|_| GraphError::Parse {
                line: lineno,
                token: t.to_string(),
            })
        };
        match size {
            None => {
                let rows = next_index(&mut tok)?;
                let cols = next_index(&mut tok)?;
                let nnz = next_index(&mut tok)?;
                if rows.max(cols) > VertexId::MAX as u64 {
                    return Err(GraphError::TooLarge(format!("{rows}x{cols}")));
                }
                size = Some((rows, cols, nnz));
                edges.reserve(nnz as usize * if mirrored { 2 } else { 1 });
            }
            Some((rows, cols, _)) => {
                let i = next_index(&mut tok)?;
                let j = next_index(&mut tok)?;
                for (index, bound) in [(i, rows), (j, cols)] {
                    if index == 0 || index > bound {
                        return Err(GraphError::IndexOutOfBounds {
                            line: lineno,
                            index,
                            bound,
                        });
                    }
                }
                let (s, d) = ((i - 1) as VertexId, (j - 1) as VertexId);
                edges.push((s, d));
                if mirrored && s != d {
                    edges.push((d, s));
                }
            }
        }
    }
    let (rows, cols, _) = size.ok_or_else(|| GraphError::MalformedHeader("missing size line".into()))?;
    Graph::from_edges(rows.max(cols) as usize, edges)
}

/// Loads a whitespace-separated `src dst` edge list with 0-based IDs.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    parse_edge_list(&read(path.as_ref())?)
}

pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut edges = Vec::new();
    let mut max_id: Option<u64> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut ids = [0u64; 2];
        let mut tok = line.split_whitespace();
        for id in &mut ids {
            let t = tok.next().ok_or_else(|| GraphError::Parse {
                line: lineno,
                token: line.to_string(),
            })?;
            if t.starts_with('-') && t[1..].parse::<u64>().is_ok() {
                return Err(GraphError::NegativeId {
                    line: lineno,
                    token: t.to_string(),
                });
            }
            *id = t.parse::<u64>().map_err(|_| GraphError::Parse {
                line: lineno,
                token: t.to_string(),
            })?;
            if *id >= VertexId::MAX as u64 {
                return Err(GraphError::TooLarge(format!("vertex id {id}")));
            }
        }
        max_id = Some(max_id.map_or(ids[0].max(ids[1]), |m| m.max(ids[0]).max(ids[1])));
        edges.push((ids[0] as VertexId, ids[1] as VertexId));
    }
    let n = max_id.map_or(0, |m| m as usize + 1);
    Graph::from_edges(n, edges)
}

/// Resolves a graph source string.
///
/// Accepted forms: `synth:grid:ROWSxCOLS`, `synth:rmat:SCALE:EDGEFACTOR`
/// (seeded by `seed`), or a file path. `format` is `mtx`, `edges` or `auto`
/// (decided by the `.mtx` extension).
pub fn load_graph(source: &str, format: &str, seed: u64) -> Result<Graph, GraphError> {
    if let Some(rest) = source.strip_prefix("synth:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || GraphError::UnknownSource(source.to_string());
        return match parts.as_slice() {
            ["grid", dims] => {
                let (r, c) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
                gen_grid(r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?)
            }
            ["rmat", scale, ef] => gen_rmat(scale.parse().map_err(|_| bad())?, ef.parse().map_err(|_| bad())?, seed),
            _ => Err(bad()),
        };
    }
    let path = Path::new(source);
    let is_mtx = match format {
        "mtx" => true,
        "edges" => false,
        "auto" => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")),
        other => return Err(GraphError::InvalidParameter(format!("unknown format {other:?}"))),
    };
    if is_mtx {
        load_matrix_market(path)
    } else {
        load_edge_list(path)
    }
}
