#![allow(dead_code)]

use proptest::prelude::*;
use truncated_hitting::{generate, DanglingPolicy, GenSpec, Model, TransitionMatrix};

/// Row-stochastic matrix from raw weights; rows left empty by the mask get
/// an edge to the next vertex.
pub fn normalized(n: usize, weights: &[f64], mask: &[bool]) -> TransitionMatrix {
    let mut dense = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut dense[i * n..(i + 1) * n];
        for j in 0..n {
            if mask[i * n + j] {
                row[j] = weights[i * n + j] + 0.01;
            }
        }
        if row.iter().all(|&x| x == 0.0) {
            row[(i + 1) % n] = 1.0;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    TransitionMatrix::from_dense(n, &dense).unwrap()
}

pub fn arb_matrix(max_n: usize) -> impl Strategy<Value = TransitionMatrix> {
    (2..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0.0..1.0f64, n * n),
            prop::collection::vec(prop::bool::weighted(0.4), n * n),
        )
            .prop_map(|(n, w, m)| normalized(n, &w, &m))
    })
}

/// Transition matrix of a generated graph with `n` in `lo..=hi`.
pub fn arb_generated(lo: usize, hi: usize) -> impl Strategy<Value = TransitionMatrix> {
    (0..3u8, lo..=hi, any::<u64>(), 2usize..=5).prop_map(|(model, n, seed, density)| {
        // the sparse models need 2n <= m <= n(n-1), so n >= 3
        let m = (density * n).min(n * (n - 1));
        let spec = match model {
            0 if n >= 3 => GenSpec::new(Model::Sp1, n, m, seed),
            1 if n >= 3 => GenSpec::new(Model::Sp2, n, m, seed),
            _ => GenSpec::dense(n, seed),
        };
        TransitionMatrix::from_graph(&generate(&spec).unwrap(), DanglingPolicy::Reject).unwrap()
    })
}

/// Random DAG over vertices in topological order `0..n`; the last vertex is
/// a self-looped sink and every other vertex has at least one forward edge.
pub fn arb_dag() -> impl Strategy<Value = TransitionMatrix> {
    (3usize..12).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0.05..1.0f64, n * n),
            prop::collection::vec(prop::bool::weighted(0.3), n * n),
        )
            .prop_map(|(n, w, m)| {
                let mut dense = vec![0.0; n * n];
                for i in 0..n - 1 {
                    let row = &mut dense[i * n..(i + 1) * n];
                    for j in i + 1..n {
                        if m[i * n + j] {
                            row[j] = w[i * n + j];
                        }
                    }
                    if row.iter().all(|&x| x == 0.0) {
                        row[i + 1] = 1.0;
                    }
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= s);
                }
                dense[n * n - 1] = 1.0;
                TransitionMatrix::from_dense(n, &dense).unwrap()
            })
    })
}

pub fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// `Pᵗ` for `t = 0..count`, dense row-major.
pub fn dense_powers(p: &TransitionMatrix, count: usize) -> Vec<Vec<f64>> {
    let n = p.n();
    let dense = p.to_dense();
    let mut out = Vec::with_capacity(count);
    let mut cur: Vec<f64> = (0..n * n)
        .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
        .collect();
    for _ in 0..count {
        let next = matmul(n, &cur, &dense);
        out.push(std::mem::replace(&mut cur, next));
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max)
}
