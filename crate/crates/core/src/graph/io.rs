//! Graph file formats.
//!
//! * Edge list: one `i j w` triple per line, 0-based, `#` starts a comment.
//!   An optional `# nodes: N` line fixes the vertex count (otherwise it is one
//!   more than the largest index seen).
//! * Matrix Market: `coordinate` adjacency, `real`/`integer`/`pattern` field,
//!   `symmetric` or `general` symmetry, 1-based.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::Graph;
use crate::error::{FgftError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    MatrixMarket,
}

impl GraphFormat {
    /// `.mtx` means Matrix Market, anything else an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("mtx") => GraphFormat::MatrixMarket,
            _ => GraphFormat::EdgeList,
        }
    }
}

pub fn load_graph(path: impl AsRef<Path>, format: GraphFormat) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| FgftError::io(path, e))?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text, path),
        GraphFormat::MatrixMarket => parse_matrix_market(&text, path),
    }
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>, format: GraphFormat) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    match format {
        GraphFormat::EdgeList => {
            writeln!(out, "# nodes: {}", g.n()).unwrap();
            for e in g.edges() {
                writeln!(out, "{} {} {}", e.i, e.j, e.w).unwrap();
            }
        }
        GraphFormat::MatrixMarket => {
            writeln!(out, "%%MatrixMarket matrix coordinate real symmetric").unwrap();
            writeln!(out, "{} {} {}", g.n(), g.n(), g.edge_count()).unwrap();
            for e in g.edges() {
                writeln!(out, "{} {} {}", e.j + 1, e.i + 1, e.w).unwrap();
            }
        }
    }
    fs::write(path, out).map_err(|e| FgftError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> FgftError {
    FgftError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Collects directed entries, merging mirrored pairs and rejecting
/// mismatched weights.
#[derive(Default)]
struct PairCollector {
    pairs: BTreeMap<(usize, usize), (f64, usize, bool, bool)>,
}

impl PairCollector {
    fn add(&mut self, path: &Path, line: usize, a: usize, b: usize, w: f64) -> Result<()> {
        if a == b {
            return Err(parse_err(path, line, format!("self-loop at vertex {a}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(parse_err(path, line, format!("non-positive weight {w}")));
        }
        let key = (a.min(b), a.max(b));
        let forward = a < b;
        match self.pairs.get_mut(&key) {
            None => {
                self.pairs.insert(key, (w, line, forward, !forward));
            }
            Some(entry) => {
                let seen = if forward { &mut entry.2 } else { &mut entry.3 };
                if *seen {
                    return Err(parse_err(
                        path,
                        line,
                        format!("duplicate edge ({}, {})", key.0, key.1),
                    ));
                }
                if entry.0 != w {
                    return Err(parse_err(
                        path,
                        line,
                        format!(
                            "asymmetric weights for ({}, {}): {} vs {}",
                            key.0, key.1, entry.0, w
                        ),
                    ));
                }
                *seen = true;
            }
        }
        Ok(())
    }

    fn finish(self, n: usize, path: &Path, require_mirror: bool) -> Result<Graph> {
        let mut edges = Vec::with_capacity(self.pairs.len());
        for ((i, j), (w, line, fwd, bwd)) in self.pairs {
            if require_mirror && !(fwd && bwd) {
                return Err(parse_err(
                    path,
                    line,
                    format!("asymmetric input: entry ({i}, {j}) has no mirror"),
                ));
            }
            edges.push((i, j, w));
        }
        Graph::new(n, edges)
    }
}

fn parse_edge_list(text: &str, path: &Path) -> Result<Graph> {
    let mut declared_n: Option<usize> = None;
    let mut max_index: Option<usize> = None;
    let mut pairs = PairCollector::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let (content, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        if let Some(rest) = comment.and_then(|c| c.trim().strip_prefix("nodes:")) {
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, line_no, "bad node count"))?;
            declared_n = Some(n);
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected `i j w`, found {} fields", fields.len()),
            ));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad vertex index `{}`", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad vertex index `{}`", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad weight `{}`", fields[2])))?;
        max_index = Some(max_index.map_or(i.max(j), |m| m.max(i).max(j)));
        pairs.add(path, line_no, i, j, w)?;
    }
    let inferred = max_index.map_or(0, |m| m + 1);
    let n = match declared_n {
        Some(n) if n < inferred => {
            return Err(parse_err(
                path,
                1,
                format!("declared {n} nodes but index {} appears", inferred - 1),
            ))
        }
        Some(n) => n,
        None => inferred,
    };
    pairs.finish(n, path, false)
}

fn parse_matrix_market(text: &str, path: &Path) -> Result<Graph> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = banner
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, "missing %%MatrixMarket matrix banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(path, 1, "only coordinate format is supported"));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(parse_err(path, 1, format!("unsupported field `{other}`"))),
    };
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => {
            return Err(parse_err(
                path,
                1,
                format!("unsupported symmetry `{other}`"),
            ))
        }
    };

    let mut size: Option<(usize, usize)> = None;
    let mut pairs = PairCollector::default();
    let mut seen_entries = 0usize;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some((n, nnz)) = size else {
            if fields.len() != 3 {
                return Err(parse_err(path, line_no, "expected `rows cols entries`"));
            }
            let nums: Vec<usize> = fields
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(path, line_no, "bad size line"))?;
            if nums[0] != nums[1] {
                return Err(parse_err(path, line_no, "adjacency matrix must be square"));
            }
            size = Some((nums[0], nums[2]));
            continue;
        };
        let expected = if pattern { 2 } else { 3 };
        if fields.len() != expected {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let r: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, "bad row index"))?;
        let c: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(path, line_no, "bad column index"))?;
        if r == 0 || c == 0 || r > n || c > n {
            return Err(parse_err(
                path,
                line_no,
                format!("index ({r}, {c}) outside 1..={n}"),
            ));
        }
        let w = if pattern {
            1.0
        } else {
            fields[2]
                .parse::<f64>()
                .map_err(|_| parse_err(path, line_no, "bad value"))?
        };
        seen_entries += 1;
        if seen_entries > nnz {
            return Err(parse_err(path, line_no, "more entries than declared"));
        }
        pairs.add(path, line_no, r - 1, c - 1, w)?;
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    if seen_entries != nnz {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("declared {nnz} entries, found {seen_entries}"),
        ));
    }
    pairs.finish(n, path, !symmetric)
}
