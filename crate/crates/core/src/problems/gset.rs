//! Weighted-graph edge lists in the Gset convention: a header `n m` followed
//! by `m` lines `i j w` with 1-based endpoints `i < j`.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// An undirected weighted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GsetGraph {
    pub n: usize,
    /// Edges (i, j, w) with 1-based `i < j`, no duplicates.
    pub edges: Vec<(usize, usize, f64)>,
}

impl GsetGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let g = GsetGraph { n, edges };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for &(i, j, _) in &self.edges {
            if i == 0 || j == 0 || i > self.n || j > self.n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for n = {}",
                    self.n
                )));
            }
            if i >= j {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) must satisfy i < j"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(())
    }

    /// Dense symmetric adjacency matrix (zero diagonal).
    pub fn adjacency(&self) -> nalgebra::DMatrix<f64> {
        let mut a = nalgebra::DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            a[(i - 1, j - 1)] = w;
            a[(j - 1, i - 1)] = w;
        }
        a
    }
}

/// Parse an edge-list file. Errors carry the 1-based line number.
pub fn read_gset(path: &Path) -> Result<GsetGraph> {
    let text = std::fs::read_to_string(path)?;
    parse_gset(&text)
}

pub fn parse_gset(text: &str) -> Result<GsetGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header line".into(),
    })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(Error::Parse {
            line: hline + 1,
            msg: format!("header must be `n m`, got {header:?}"),
        });
    }
    let n: usize = head[0].parse().map_err(|e| Error::Parse {
        line: hline + 1,
        msg: format!("bad node count: {e}"),
    })?;
    let m: usize = head[1].parse().map_err(|e| Error::Parse {
        line: hline + 1,
        msg: format!("bad edge count: {e}"),
    })?;

    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("edge line must be `i j w`, got {line:?}"),
            });
        }
        let i: usize = parts[0].parse().map_err(|e| Error::Parse {
            line: lineno + 1,
            msg: format!("bad endpoint: {e}"),
        })?;
        let j: usize = parts[1].parse().map_err(|e| Error::Parse {
            line: lineno + 1,
            msg: format!("bad endpoint: {e}"),
        })?;
        let w: f64 = parts[2].parse().map_err(|e| Error::Parse {
            line: lineno + 1,
            msg: format!("bad weight: {e}"),
        })?;
        if i == j {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("self-loop ({i}, {j})"),
            });
        }
        if i > j || i == 0 || j > n {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("edge ({i}, {j}) must satisfy 1 <= i < j <= {n}"),
            });
        }
        if !seen.insert((i, j)) {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("duplicate edge ({i}, {j})"),
            });
        }
        edges.push((i, j, w));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: edges.len() + 2,
            msg: format!("header promised {m} edges, file has {}", edges.len()),
        });
    }
    Ok(GsetGraph { n, edges })
}

/// Write a graph in the same grammar `read_gset` parses.
pub fn write_gset(graph: &GsetGraph, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", graph.n, graph.edges.len());
    for &(i, j, w) in &graph.edges {
        if w == w.trunc() && w.abs() < 1e15 {
            let _ = writeln!(out, "{i} {j} {}", w as i64);
        } else {
            let _ = writeln!(out, "{i} {j} {w}");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
