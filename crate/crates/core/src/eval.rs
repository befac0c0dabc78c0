//! Accuracy of the approximation against exact hitting times: relative
//! errors, ranking inversions, and the synthetic-graph benchmark.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{approx_all_starts, HittingProfile, Order};
use crate::error::{check_len, Error, Result};
use crate::exact::{exact_recursive_capped, HittingMatrix, RECURSIVE_CAP};
use crate::generate::{generate, GenSpec, Model};
use crate::transition::{DanglingPolicy, TransitionMatrix};

/// Hitting-time values closer than this are ranked as ties.
pub const TIE_RESOLUTION: f64 = 1e-12;

/// Anything that holds one row of hitting times per start vertex.
pub trait StartRows {
    fn start_count(&self) -> usize;
    fn start_row(&self, i: usize) -> &[f64];
}

impl StartRows for HittingMatrix {
    fn start_count(&self) -> usize {
        self.n()
    }

    fn start_row(&self, i: usize) -> &[f64] {
        self.row(i)
    }
}

impl StartRows for [HittingProfile] {
    fn start_count(&self) -> usize {
        self.len()
    }

    fn start_row(&self, i: usize) -> &[f64] {
        &self[i].values
    }
}

impl StartRows for Vec<HittingProfile> {
    fn start_count(&self) -> usize {
        self.len()
    }

    fn start_row(&self, i: usize) -> &[f64] {
        &self[i].values
    }
}

fn check_shapes<A: StartRows + ?Sized>(exact: &HittingMatrix, approx: &A) -> Result<()> {
    check_len(exact.n(), approx.start_count())?;
    for i in 0..exact.n() {
        check_len(exact.n(), approx.start_row(i).len())?;
    }
    Ok(())
}

/// Mean and max of `|h_ij - ĥ_ij| / h_ij` over ordered pairs `i ≠ j`.
pub fn relative_error_stats<A: StartRows + ?Sized>(
    exact: &HittingMatrix,
    approx: &A,
) -> Result<(f64, f64)> {
    check_shapes(exact, approx)?;
    let n = exact.n();
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut pairs = 0usize;
    for i in 0..n {
        let row = approx.start_row(i);
        for j in (0..n).filter(|&j| j != i) {
            let h = exact.get(i, j);
            let err = ((h - row[j]) / h).abs();
            sum += err;
            max = max.max(err);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::validation(
            "relative error needs at least two vertices",
        ));
    }
    // a mean of equal terms can round one ulp above them
    Ok(((sum / pairs as f64).min(max), max))
}

fn tie_key(x: f64) -> i64 {
    (x / TIE_RESOLUTION).round() as i64
}

/// Number of target pairs ordered strictly one way by `exact` and strictly
/// the other way by `approx`. Ties in either ranking never count.
pub fn discordant_pairs(exact: &[f64], approx: &[f64]) -> u64 {
    let mut keyed: Vec<(i64, i64)> = exact
        .iter()
        .zip(approx)
        .map(|(&a, &b)| (tie_key(a), tie_key(b)))
        .collect();
    // Sorted by (exact, approx), a pair is discordant exactly when the
    // approx keys are strictly out of order.
    keyed.sort_unstable();
    let mut seq: Vec<i64> = keyed.into_iter().map(|(_, b)| b).collect();
    let mut scratch = vec![0i64; seq.len()];
    count_strict_inversions(&mut seq, &mut scratch)
}

fn count_strict_inversions(seq: &mut [i64], scratch: &mut [i64]) -> u64 {
    let len = seq.len();
    if len < 2 {
        return 0;
    }
    let mid = len / 2;
    let mut count = {
        let (lo, hi) = seq.split_at_mut(mid);
        let (slo, shi) = scratch.split_at_mut(mid);
        count_strict_inversions(lo, slo) + count_strict_inversions(hi, shi)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < len {
        if seq[i] <= seq[j] {
            scratch[k] = seq[i];
            i += 1;
        } else {
            scratch[k] = seq[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    scratch[k..k + len - j].copy_from_slice(&seq[j..len]);
    seq.copy_from_slice(&scratch[..len]);
    count
}

/// Fraction of target pairs `{j, k}` (both `≠ start`) ranked in opposite
/// order by the two rows.
pub fn start_inversion_fraction(exact: &[f64], approx: &[f64], start: usize) -> f64 {
    let n = exact.len();
    let pick = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .enumerate()
            .filter(|&(j, _)| j != start)
            .map(|(_, &x)| x)
            .collect()
    };
    let targets = (n - 1) as u64;
    let pairs = targets * (targets - 1) / 2;
    discordant_pairs(&pick(exact), &pick(approx)) as f64 / pairs as f64
}

/// Mean and max over start vertices of the per-start inversion fraction.
pub fn inversion_stats<A: StartRows + ?Sized>(
    exact: &HittingMatrix,
    approx: &A,
) -> Result<(f64, f64)> {
    check_shapes(exact, approx)?;
    let n = exact.n();
    if n < 3 {
        return Err(Error::validation(format!(
            "inversions need at least 3 vertices, got {n}"
        )));
    }
    let fractions: Vec<f64> = (0..n)
        .map(|i| start_inversion_fraction(exact.row(i), approx.start_row(i), i))
        .collect();
    let max = fractions.iter().copied().fold(0.0, f64::max);
    Ok(((fractions.iter().sum::<f64>() / n as f64).min(max), max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyStats {
    pub avg_err: f64,
    pub max_err: f64,
    pub avg_inv: f64,
    pub max_inv: f64,
}

impl AccuracyStats {
    pub fn compare<A: StartRows + ?Sized>(exact: &HittingMatrix, approx: &A) -> Result<Self> {
        let (avg_err, max_err) = relative_error_stats(exact, approx)?;
        let (avg_inv, max_inv) = inversion_stats(exact, approx)?;
        Ok(AccuracyStats {
            avg_err,
            max_err,
            avg_inv,
            max_inv,
        })
    }

    /// Mean of the averages, max of the maxima.
    pub fn aggregate(instances: &[AccuracyStats]) -> Self {
        let k = instances.len() as f64;
        let max_err = instances.iter().map(|s| s.max_err).fold(0.0, f64::max);
        let max_inv = instances.iter().map(|s| s.max_inv).fold(0.0, f64::max);
        AccuracyStats {
            avg_err: (instances.iter().map(|s| s.avg_err).sum::<f64>() / k).min(max_err),
            max_err,
            avg_inv: (instances.iter().map(|s| s.avg_inv).sum::<f64>() / k).min(max_inv),
            max_inv,
        }
    }
}

/// Exact ground truth and the approximation from every start on one matrix.
pub fn evaluate_transition(
    p: &TransitionMatrix,
    horizon: usize,
    order: Order,
) -> Result<AccuracyStats> {
    let exact = exact_recursive_capped(p, horizon, RECURSIVE_CAP)?;
    let approx = approx_all_starts(p, horizon, order)?;
    AccuracyStats::compare(&exact, &approx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellSpec {
    pub model: Model,
    pub n: usize,
    /// Edge count; for DEN this is `n(n-1)`.
    pub m: usize,
}

impl CellSpec {
    pub fn new(model: Model, n: usize, m: usize) -> Self {
        let m = if model == Model::Den { n * (n - 1) } else { m };
        CellSpec { model, n, m }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkConfig {
    pub horizon: usize,
    pub order: Order,
    pub base_seed: u64,
    pub instances: usize,
    pub cells: Vec<CellSpec>,
}

impl BenchmarkConfig {
    /// SP1, SP2 and DEN at 10, 100 and 1000 vertices (20, 1000 and 10000
    /// edges for the sparse models), 30 graphs per cell, `T = 10`.
    pub fn standard(base_seed: u64) -> Self {
        let sizes = [(10, 20), (100, 1000), (1000, 10000)];
        let cells = [Model::Sp1, Model::Sp2, Model::Den]
            .into_iter()
            .flat_map(|model| sizes.map(|(n, m)| CellSpec::new(model, n, m)))
            .collect();
        BenchmarkConfig {
            horizon: 10,
            order: Order::Zero,
            base_seed,
            instances: 30,
            cells,
        }
    }

    pub fn instance_seed(&self, cell: &CellSpec, instance: usize) -> u64 {
        let model = match cell.model {
            Model::Sp1 => 1u64,
            Model::Sp2 => 2,
            Model::Den => 3,
        };
        let mut x = splitmix64(self.base_seed);
        for word in [model, cell.n as u64, cell.m as u64, instance as u64] {
            x = splitmix64(x ^ word);
        }
        x
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub model: Model,
    pub n: usize,
    pub m: usize,
    pub avg_err: f64,
    pub max_err: f64,
    pub avg_inv: f64,
    pub max_inv: f64,
    pub instances: usize,
}

impl CellReport {
    pub fn stats(&self) -> AccuracyStats {
        AccuracyStats {
            avg_err: self.avg_err,
            max_err: self.max_err,
            avg_inv: self.avg_inv,
            max_inv: self.max_inv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: BenchmarkConfig,
    pub cells: Vec<CellReport>,
}

impl EvalReport {
    pub fn cell(&self, model: Model, n: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.model == model && c.n == n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Four rows (avg/max error, avg/max inversions), one column per cell.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<8}", "");
        for c in &self.cells {
            let _ = write!(out, " | {:>10}", format!("{} {}", c.model, c.n));
        }
        out.push('\n');
        let rule = 8 + self.cells.len() * 13;
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        let rows: [(&str, fn(&CellReport) -> f64); 4] = [
            ("avg err", |c| c.avg_err),
            ("max err", |c| c.max_err),
            ("avg inv", |c| c.avg_inv),
            ("max inv", |c| c.max_inv),
        ];
        for (label, get) in rows {
            let _ = write!(out, "{label:<8}");
            for c in &self.cells {
                let _ = write!(out, " | {:>10.4}", get(c));
            }
            out.push('\n');
        }
        out
    }
}

pub fn run_benchmark(config: &BenchmarkConfig) -> Result<EvalReport> {
    if config.instances == 0 {
        return Err(Error::validation("need at least one instance per cell"));
    }
    let mut cells = Vec::with_capacity(config.cells.len());
    for cell in &config.cells {
        let spec = GenSpec::new(cell.model, cell.n, cell.m, 0);
        spec.validate()?;
        if cell.n > RECURSIVE_CAP {
            return Err(Error::Resource(format!(
                "cell {} n={} exceeds the exact oracle cap of {RECURSIVE_CAP}",
                cell.model, cell.n
            )));
        }
        let stats = (0..config.instances)
            .into_par_iter()
            .map(|k| {
                let spec = GenSpec {
                    seed: config.instance_seed(cell, k),
                    ..spec
                };
                let graph = generate(&spec)?;
                let p = TransitionMatrix::from_graph(&graph, DanglingPolicy::Reject)?;
                evaluate_transition(&p, config.horizon, config.order)
            })
            .collect::<Result<Vec<_>>>()?;
        let agg = AccuracyStats::aggregate(&stats);
        cells.push(CellReport {
            model: cell.model,
            n: cell.n,
            m: cell.m,
            avg_err: agg.avg_err,
            max_err: agg.max_err,
            avg_inv: agg.avg_inv,
            max_inv: agg.max_inv,
            instances: config.instances,
        });
    }
    Ok(EvalReport {
        config: config.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, rows: &[&[f64]]) -> HittingMatrix {
        HittingMatrix::new(n, 10, rows.concat()).unwrap()
    }

    fn brute_discordant(a: &[f64], b: &[f64]) -> u64 {
        let mut c = 0;
        for j in 0..a.len() {
            for k in j + 1..a.len() {
                if (a[j] - a[k]) * (b[j] - b[k]) < 0.0 {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn identical_matrices_score_zero() {
        let h = matrix(3, &[&[0., 2., 3.], &[1.5, 0., 4.], &[2., 2., 0.]]);
        assert_eq!(relative_error_stats(&h, &h).unwrap(), (0.0, 0.0));
        assert_eq!(inversion_stats(&h, &h).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn relative_error_formula() {
        let exact = matrix(2, &[&[0., 2.], &[2., 0.]]);
        let approx = matrix(2, &[&[0., 2.1], &[1.9, 0.]]);
        let (avg, max) = relative_error_stats(&exact, &approx).unwrap();
        assert!((avg - 0.05).abs() < 1e-12 && (max - 0.05).abs() < 1e-12);
        let approx = matrix(2, &[&[0., 2.], &[2.2, 0.]]);
        let (avg, max) = relative_error_stats(&exact, &approx).unwrap();
        assert!((avg - 0.05).abs() < 1e-12 && (max - 0.1).abs() < 1e-12);
    }

    #[test]
    fn one_swapped_pair_is_a_third() {
        let exact = matrix(
            4,
            &[
                &[0., 1., 2., 3.],
                &[1., 0., 2., 3.],
                &[1., 2., 0., 3.],
                &[1., 2., 3., 0.],
            ],
        );
        let approx = matrix(
            4,
            &[
                &[0., 2., 1., 3.],
                &[1., 0., 2., 3.],
                &[1., 2., 0., 3.],
                &[1., 2., 3., 0.],
            ],
        );
        let (avg, max) = inversion_stats(&exact, &approx).unwrap();
        assert!((max - 1.0 / 3.0).abs() < 1e-15);
        assert!((avg - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_ranking_is_one() {
        assert_eq!(
            start_inversion_fraction(&[0., 1., 2., 3.], &[0., 3., 2., 1.], 0),
            1.0
        );
    }

    #[test]
    fn ties_never_count() {
        assert_eq!(discordant_pairs(&[1., 1., 2.], &[2., 1., 2.]), 0);
        assert_eq!(discordant_pairs(&[1., 2.], &[3., 3.]), 0);
    }

    #[test]
    fn too_few_vertices() {
        let h = matrix(2, &[&[0., 2.], &[2., 0.]]);
        assert!(matches!(inversion_stats(&h, &h), Err(Error::Validation(_))));
    }

    #[test]
    fn merge_count_matches_brute_force() {
        let vals = [1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 8.0];
        let mut state = 7u64;
        for _ in 0..200 {
            let mut pick = || {
                state = splitmix64(state);
                vals[(state % vals.len() as u64) as usize]
            };
            let a: Vec<f64> = (0..9).map(|_| pick()).collect();
            let b: Vec<f64> = (0..9).map(|_| pick()).collect();
            assert_eq!(discordant_pairs(&a, &b), brute_discordant(&a, &b));
        }
    }

    #[test]
    fn profiles_work_as_rows() {
        let h = matrix(3, &[&[0., 2., 3.], &[1.5, 0., 4.], &[2., 2., 0.]]);
        let profiles: Vec<_> = (0..3).map(|i| h.profile(i, Order::Zero)).collect();
        assert_eq!(relative_error_stats(&h, &profiles).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn deterministic_cycle_fixture_scores_zero() {
        let p = TransitionMatrix::from_dense(3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]).unwrap();
        let stats = evaluate_transition(&p, 10, Order::Zero).unwrap();
        assert_eq!(
            stats,
            AccuracyStats {
                avg_err: 0.0,
                max_err: 0.0,
                avg_inv: 0.0,
                max_inv: 0.0
            }
        );
    }

    #[test]
    fn small_benchmark_is_reproducible() {
        let config = BenchmarkConfig {
            horizon: 10,
            order: Order::Zero,
            base_seed: 5,
            instances: 3,
            cells: vec![
                CellSpec::new(Model::Sp1, 10, 20),
                CellSpec::new(Model::Den, 10, 0),
            ],
        };
        let a = run_benchmark(&config).unwrap();
        let b = run_benchmark(&config).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.cells.len(), 2);
        assert_eq!(a.cells[1].m, 90);
        assert!(a.table().contains("avg err"));
    }
}
