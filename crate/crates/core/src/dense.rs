//! Dense n×n work for desk-scale computations: exact oracles and evaluating
//! every start vertex at once.

use rayon::prelude::*;

use crate::transition::TransitionMatrix;

/// Above this fill ratio the transition matrix is expanded and multiplied
/// with a blocked GEMM instead of row scatters.
const DENSE_FILL: f64 = 1.0 / 16.0;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Square {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Square::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Square { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// Multiplies square matrices by a fixed transition matrix, picking sparse
/// scatters or a dense GEMM depending on fill.
pub(crate) struct Multiplier<'a> {
    sparse: &'a TransitionMatrix,
    dense: Option<Vec<f64>>,
}

impl<'a> Multiplier<'a> {
    pub(crate) fn new(p: &'a TransitionMatrix) -> Self {
        let n = p.n() as f64;
        let dense = (p.nnz() as f64 > DENSE_FILL * n * n).then(|| p.to_dense());
        Multiplier { sparse: p, dense }
    }

    /// `out = state · P`. Row `i` of the result is `Pᵀ` applied to row `i`.
    pub(crate) fn right(&self, state: &Square, out: &mut Square) {
        let n = state.n;
        if let Some(d) = &self.dense {
            gemm(n, state.as_slice(), d, out.as_mut_slice());
            return;
        }
        let p = self.sparse;
        out.data
            .par_chunks_mut(n)
            .zip(state.data.par_chunks(n))
            .for_each(|(o, s)| {
                o.fill(0.0);
                for (u, &mass) in s.iter().enumerate() {
                    if mass == 0.0 {
                        continue;
                    }
                    let (t, pr) = p.row(u);
                    for (&v, &prob) in t.iter().zip(pr) {
                        o[v as usize] += mass * prob;
                    }
                }
            });
    }

    /// `out = P · state`.
    pub(crate) fn left(&self, state: &Square, out: &mut Square) {
        let n = state.n;
        if let Some(d) = &self.dense {
            gemm(n, d, state.as_slice(), out.as_mut_slice());
            return;
        }
        let p = self.sparse;
        out.data.par_chunks_mut(n).enumerate().for_each(|(u, o)| {
            o.fill(0.0);
            let (t, pr) = p.row(u);
            for (&k, &prob) in t.iter().zip(pr) {
                for (x, &y) in o.iter_mut().zip(state.row(k as usize)) {
                    *x += prob * y;
                }
            }
        });
    }
}

/// `c = a · b` for row-major n×n matrices.
fn gemm(n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    let stride = n as isize;
    // SAFETY: all three slices hold n*n elements laid out row-major with row
    // stride n and column stride 1, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            n,
            n,
            n,
            1.0,
            a.as_ptr(),
            stride,
            1,
            b.as_ptr(),
            stride,
            1,
            0.0,
            c.as_mut_ptr(),
            stride,
            1,
        );
    }
}
