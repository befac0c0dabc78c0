//! Weighted directed graphs and the tab-separated edge-list format.
//!
//! Vertices are dense integers `0..n`. Lines look like `src<TAB>dst<TAB>weight`
//! with the weight optional (default `1.0`); lines starting with `#` are
//! comments, except for an optional `# n=<count>` header that fixes the vertex
//! count (useful for graphs whose highest-numbered vertices have no edges).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Vertex identifier. The shard format stores ids as `u32`.
pub type VertexId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: VertexId, dst: VertexId, weight: f64) -> Self {
        Edge { src, dst, weight }
    }
}

/// What to do when the same `(src, dst)` pair shows up more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Duplicates {
    /// Sum the weights into one edge.
    #[default]
    Merge,
    /// Treat a repeated pair as a validation error.
    Reject,
}

/// A validated weighted digraph. Edges are kept sorted by `(src, dst)` and
/// contain no repeated pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<Edge>, duplicates: Duplicates) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("graph must have at least one vertex"));
        }
        if n > VertexId::MAX as usize + 1 {
            return Err(Error::validation(format!(
                "vertex count {n} does not fit in 32-bit ids"
            )));
        }
        let mut edges = edges;
        for e in &edges {
            if e.src as usize >= n || e.dst as usize >= n {
                return Err(Error::validation(format!(
                    "edge ({}, {}) references a vertex outside 0..{n}",
                    e.src, e.dst
                )));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::validation(format!(
                    "edge ({}, {}) has invalid weight {}",
                    e.src, e.dst, e.weight
                )));
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        let mut merged: Vec<Edge> = Vec::with_capacity(edges.len());
        for e in edges {
            match merged.last_mut() {
                Some(last) if last.src == e.src && last.dst == e.dst => match duplicates {
                    Duplicates::Merge => last.weight += e.weight,
                    Duplicates::Reject => {
                        return Err(Error::validation(format!(
                            "duplicate edge ({}, {})",
                            e.src, e.dst
                        )))
                    }
                },
                _ => merged.push(e),
            }
        }

        // Every vertex with out-edges needs some positive out-weight.
        let mut start = 0;
        while start < merged.len() {
            let src = merged[start].src;
            let end = start + merged[start..].iter().take_while(|e| e.src == src).count();
            if merged[start..end].iter().all(|e| e.weight == 0.0) {
                return Err(Error::validation(format!(
                    "vertex {src} has out-edges but zero total out-weight"
                )));
            }
            start = end;
        }

        Ok(Graph { n, edges: merged })
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

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.src as usize] += 1;
        }
        deg
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.dst as usize] += 1;
        }
        deg
    }

    /// Reads an edge list file.
    pub fn load_edge_list(path: impl AsRef<Path>, duplicates: Duplicates) -> Result<Self> {
        let path = path.as_ref();
        let file =
            File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_edge_list(BufReader::new(file), path, duplicates)
    }

    pub fn read_edge_list<R: BufRead>(
        reader: R,
        origin: &Path,
        duplicates: Duplicates,
    ) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut header_n: Option<usize> = None;
        let mut max_id: Option<VertexId> = None;
        let mut edges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(format!("reading {}", origin.display()), e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(value) = comment.trim().strip_prefix("n=") {
                    let n = value
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| parse_err(lineno, format!("bad vertex count header: {e}")))?;
                    header_n = Some(n);
                }
                continue;
            }
            let mut fields = trimmed.split_ascii_whitespace();
            let (Some(src), Some(dst)) = (fields.next(), fields.next()) else {
                return Err(parse_err(lineno, "expected src and dst fields".into()));
            };
            let src = src
                .parse::<VertexId>()
                .map_err(|e| parse_err(lineno, format!("bad source id {src:?}: {e}")))?;
            let dst = dst
                .parse::<VertexId>()
                .map_err(|e| parse_err(lineno, format!("bad target id {dst:?}: {e}")))?;
            let weight = match fields.next() {
                Some(w) => w
                    .parse::<f64>()
                    .map_err(|e| parse_err(lineno, format!("bad weight {w:?}: {e}")))?,
                None => 1.0,
            };
            if fields.next().is_some() {
                return Err(parse_err(lineno, "too many fields".into()));
            }
            if weight < 0.0 || !weight.is_finite() {
                return Err(Error::validation(format!(
                    "{}:{lineno}: edge ({src}, {dst}) has invalid weight {weight}",
                    origin.display()
                )));
            }
            max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
            edges.push(Edge::new(src, dst, weight));
        }
        let seen = max_id.map_or(0, |m| m as usize + 1);
        let n = match header_n {
            Some(n) if n < seen => {
                return Err(Error::validation(format!(
                    "header declares n={n} but vertex {} appears",
                    seen - 1
                )))
            }
            Some(n) => n,
            None => seen,
        };
        Graph::new(n, edges, duplicates)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Weights are written in shortest round-trip form.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# n={}", self.n)?;
        for e in &self.edges {
            writeln!(out, "{}\t{}\t{}", e.src, e.dst, e.weight)?;
        }
        Ok(())
    }
}
