//! Row-stochastic transition matrices and the transposed matrix-vector
//! product that drives every walk computation.

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::graph::{Graph, VertexId};

const ROW_SUM_TOL: f64 = 1e-12;
const DIST_SUM_TOL: f64 = 1e-9;

/// Below this many stored entries the scatter runs on one thread.
const PARALLEL_NNZ: usize = 1 << 16;

/// How to treat vertices without out-edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DanglingPolicy {
    /// Give the vertex a unit self-loop.
    #[default]
    SelfLoop,
    /// Refuse to build the matrix.
    Reject,
}

/// Where a transition operator keeps its entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Memory,
    Stream,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Memory => f.write_str("memory"),
            Backend::Stream => f.write_str("stream"),
        }
    }
}

/// A distribution over vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("distribution must be non-empty"));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::validation(format!(
                "probability at vertex {i} is {v}, outside [0, 1]"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::validation(format!(
                "distribution sums to {sum}, not 1"
            )));
        }
        Ok(ProbabilityVector(values))
    }

    pub(crate) fn new_unchecked(values: Vec<f64>) -> Self {
        ProbabilityVector(values)
    }

    /// Unit mass on `vertex`.
    pub fn delta(n: usize, vertex: usize) -> Result<Self> {
        if vertex >= n {
            return Err(Error::validation(format!(
                "start vertex {vertex} out of range for a graph with {n} vertices"
            )));
        }
        let mut v = vec![0.0; n];
        v[vertex] = 1.0;
        Ok(ProbabilityVector(v))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("distribution must be non-empty"));
        }
        Ok(ProbabilityVector(vec![1.0 / n as f64; n]))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation(format!("invalid start weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::validation("start weights must have a positive sum"));
        }
        Ok(ProbabilityVector(
            weights.iter().map(|w| w / total).collect(),
        ))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// The vertex carrying all the mass, if there is one.
    pub fn point_mass(&self) -> Option<usize> {
        let i = self.0.iter().position(|&v| v == 1.0)?;
        self.0
            .iter()
            .enumerate()
            .all(|(j, &v)| j == i || v == 0.0)
            .then_some(i)
    }
}

/// Anything that can advance a walk distribution by one step.
pub trait TransitionOperator: Sync {
    fn n(&self) -> usize;

    fn nnz(&self) -> usize;

    fn backend(&self) -> Backend;

    /// Overwrites `p` with `Pᵀ p`.
    fn step_in_place(&self, p: &mut [f64]) -> Result<()>;

    /// Self-transition probabilities `P_jj`.
    fn diagonal(&self) -> Result<Vec<f64>>;

    /// Random row access, available only when the matrix is in memory.
    fn in_memory(&self) -> Option<&TransitionMatrix> {
        None
    }
}

/// In-memory CSR transition matrix. Rows are sorted by target and none is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    probs: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_graph(graph: &Graph, dangling: DanglingPolicy) -> Result<Self> {
        let n = graph.n();
        let mut totals = vec![0.0f64; n];
        for e in graph.edges() {
            totals[e.src as usize] += e.weight;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(graph.edge_count());
        let mut probs = Vec::with_capacity(graph.edge_count());
        offsets.push(0);
        let edges = graph.edges();
        let mut cursor = 0;
        for u in 0..n {
            let first = targets.len();
            while cursor < edges.len() && edges[cursor].src as usize == u {
                let e = edges[cursor];
                if e.weight > 0.0 {
                    targets.push(e.dst);
                    probs.push(e.weight / totals[u]);
                }
                cursor += 1;
            }
            if targets.len() == first {
                match dangling {
                    DanglingPolicy::SelfLoop => {
                        targets.push(u as VertexId);
                        probs.push(1.0);
                    }
                    DanglingPolicy::Reject => {
                        return Err(Error::validation(format!("vertex {u} has no out-edges")))
                    }
                }
            }
            offsets.push(targets.len());
        }
        Ok(TransitionMatrix {
            n,
            offsets,
            targets,
            probs,
        })
    }

    /// Builds a matrix from a dense row-major array; zero entries are dropped.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        check_len(n * n, dense.len())?;
        let mut rows = Vec::with_capacity(n);
        for u in 0..n {
            let row: Vec<(VertexId, f64)> = dense[u * n..(u + 1) * n]
                .iter()
                .enumerate()
                .filter(|(_, &p)| p != 0.0)
                .map(|(v, &p)| (v as VertexId, p))
                .collect();
            rows.push(row);
        }
        Self::from_rows(n, rows)
    }

    /// Builds a matrix from explicit rows, checking stochasticity.
    pub fn from_rows(n: usize, rows: Vec<Vec<(VertexId, f64)>>) -> Result<Self> {
        check_len(n, rows.len())?;
        if n == 0 {
            return Err(Error::validation("matrix must have at least one row"));
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        for (u, mut row) in rows.into_iter().enumerate() {
            if row.is_empty() {
                return Err(Error::validation(format!("vertex {u} has no out-edges")));
            }
            row.sort_by_key(|&(v, _)| v);
            let mut sum = 0.0;
            for (i, &(v, p)) in row.iter().enumerate() {
                if v as usize >= n {
                    return Err(Error::validation(format!(
                        "row {u} targets vertex {v} >= {n}"
                    )));
                }
                if i > 0 && row[i - 1].0 == v {
                    return Err(Error::validation(format!("row {u} repeats target {v}")));
                }
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::validation(format!(
                        "P[{u},{v}] = {p} is outside (0, 1]"
                    )));
                }
                sum += p;
                targets.push(v);
                probs.push(p);
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::validation(format!("row {u} sums to {sum}")));
            }
            offsets.push(targets.len());
        }
        Ok(TransitionMatrix {
            n,
            offsets,
            targets,
            probs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    pub fn row(&self, u: usize) -> (&[VertexId], &[f64]) {
        let range = self.offsets[u]..self.offsets[u + 1];
        (&self.targets[range.clone()], &self.probs[range])
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Iterates `(src, dst, prob)` in row order.
    pub fn entries(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        (0..self.n).flat_map(move |u| {
            let (t, p) = self.row(u);
            t.iter()
                .zip(p)
                .map(move |(&v, &prob)| (u as VertexId, v, prob))
        })
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let (t, p) = self.row(u);
        t.binary_search(&(v as VertexId)).map_or(0.0, |k| p[k])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for (u, v, p) in self.entries() {
            dense[u as usize * self.n + v as usize] = p;
        }
        dense
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `Pᵀ p` for a distribution `p`.
    pub fn apply_transposed(&self, p: &ProbabilityVector) -> Result<ProbabilityVector> {
        check_len(self.n, p.len())?;
        let mut out = vec![0.0; self.n];
        self.scatter_into(p.as_slice(), &mut out);
        Ok(ProbabilityVector::new_unchecked(out))
    }

    /// Adds `Pᵀ input` to `out`, splitting rows across the rayon pool when
    /// the matrix is large enough.
    pub(crate) fn scatter_into(&self, input: &[f64], out: &mut [f64]) {
        let workers = rayon::current_num_threads();
        if workers <= 1 || self.nnz() < PARALLEL_NNZ {
            self.scatter_rows(0, self.n, input, out);
            return;
        }
        let ranges = balanced_row_ranges(&self.offsets, workers);
        let partials: Vec<Vec<f64>> = ranges
            .par_iter()
            .map(|&(lo, hi)| {
                let mut part = vec![0.0; self.n];
                self.scatter_rows(lo, hi, input, &mut part);
                part
            })
            .collect();
        for part in partials {
            for (o, x) in out.iter_mut().zip(part) {
                *o += x;
            }
        }
    }

    fn scatter_rows(&self, lo: usize, hi: usize, input: &[f64], out: &mut [f64]) {
        for u in lo..hi {
            let mass = input[u];
            if mass == 0.0 {
                continue;
            }
            let (t, p) = self.row(u);
            for (&v, &prob) in t.iter().zip(p) {
                out[v as usize] += mass * prob;
            }
        }
    }
}

impl TransitionOperator for TransitionMatrix {
    fn n(&self) -> usize {
        self.n
    }

    fn nnz(&self) -> usize {
        self.targets.len()
    }

    fn backend(&self) -> Backend {
        Backend::Memory
    }

    fn step_in_place(&self, p: &mut [f64]) -> Result<()> {
        check_len(self.n, p.len())?;
        let mut out = vec![0.0; self.n];
        self.scatter_into(p, &mut out);
        p.copy_from_slice(&out);
        Ok(())
    }

    fn diagonal(&self) -> Result<Vec<f64>> {
        Ok((0..self.n).map(|j| self.get(j, j)).collect())
    }

    fn in_memory(&self) -> Option<&TransitionMatrix> {
        Some(self)
    }
}

/// Splits rows into at most `parts` contiguous ranges with similar entry counts.
pub(crate) fn balanced_row_ranges(offsets: &[usize], parts: usize) -> Vec<(usize, usize)> {
    let n = offsets.len() - 1;
    let parts = parts.clamp(1, n.max(1));
    let nnz = offsets[n];
    let mut ranges = Vec::with_capacity(parts);
    let mut lo = 0;
    for k in 0..parts {
        let remaining_parts = parts - k - 1;
        let target = nnz * (k + 1) / parts;
        let mut hi = lo + 1;
        while hi < n - remaining_parts && offsets[hi] < target {
            hi += 1;
        }
        if k + 1 == parts {
            hi = n;
        }
        ranges.push((lo, hi));
        lo = hi;
    }
    ranges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Duplicates, Edge};

    fn graph(n: usize, edges: &[(u32, u32, f64)]) -> Graph {
        Graph::new(
            n,
            edges.iter().map(|&(s, d, w)| Edge::new(s, d, w)).collect(),
            Duplicates::Reject,
        )
        .unwrap()
    }

    #[test]
    fn uniform_normalization() {
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0)]);
        let p = TransitionMatrix::from_graph(&g, DanglingPolicy::Reject).unwrap();
        assert_eq!(p.row(0), (&[1u32, 2][..], &[0.5, 0.5][..]));
    }

    #[test]
    fn dangling_policies() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let p = TransitionMatrix::from_graph(&g, DanglingPolicy::SelfLoop).unwrap();
        assert_eq!(p.row(3), (&[3u32][..], &[1.0][..]));
        let err = TransitionMatrix::from_graph(&g, DanglingPolicy::Reject).unwrap_err();
        assert!(
            err.to_string().contains("vertex 3 has no out-edges"),
            "{err}"
        );
    }

    #[test]
    fn zero_weight_edges_are_dropped() {
        let g = graph(2, &[(0, 0, 0.0), (0, 1, 2.0), (1, 0, 1.0)]);
        let p = TransitionMatrix::from_graph(&g, DanglingPolicy::Reject).unwrap();
        assert_eq!(p.row(0), (&[1u32][..], &[1.0][..]));
    }

    #[test]
    fn identity_operator() {
        let p = TransitionMatrix::from_dense(3, &[1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let x = ProbabilityVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(p.apply_transposed(&x).unwrap(), x);
    }

    #[test]
    fn deterministic_two_cycle() {
        let p = TransitionMatrix::from_dense(2, &[0., 1., 1., 0.]).unwrap();
        let q = p
            .apply_transposed(&ProbabilityVector::delta(2, 0).unwrap())
            .unwrap();
        assert_eq!(q.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn fair_coin_chain() {
        let p = TransitionMatrix::from_dense(2, &[0.5; 4]).unwrap();
        let q = p
            .apply_transposed(&ProbabilityVector::delta(2, 0).unwrap())
            .unwrap();
        assert_eq!(q.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch() {
        let p = TransitionMatrix::from_dense(2, &[0.5; 4]).unwrap();
        let x = ProbabilityVector::uniform(3).unwrap();
        assert!(matches!(
            p.apply_transposed(&x),
            Err(Error::Dimension {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn probability_vector_checks() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbabilityVector::delta(3, 3).is_err());
        assert!(ProbabilityVector::from_weights(&[0.0, 0.0]).is_err());
        assert_eq!(
            ProbabilityVector::from_weights(&[2.0, 0.0, 2.0])
                .unwrap()
                .as_slice(),
            &[0.5, 0.0, 0.5]
        );
        assert_eq!(
            ProbabilityVector::delta(4, 2).unwrap().point_mass(),
            Some(2)
        );
        assert_eq!(ProbabilityVector::uniform(4).unwrap().point_mass(), None);
    }

    #[test]
    fn balanced_ranges_cover_all_rows() {
        let offsets = [0, 5, 6, 7, 20, 21];
        for parts in 1..=7 {
            let r = balanced_row_ranges(&offsets, parts);
            assert_eq!(r.first().unwrap().0, 0);
            assert_eq!(r.last().unwrap().1, 5);
            for w in r.windows(2) {
                assert_eq!(w[0].1, w[1].0);
            }
            assert!(r.iter().all(|&(lo, hi)| lo < hi));
        }
    }
}
