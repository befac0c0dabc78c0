//! Monte-Carlo estimates of the return probabilities `Pᵗ_jj`, and hitting
//! times computed from the first-passage identity with those estimates in
//! place of exact diagonals.
//!
//! Sampling needs random access to rows, so only in-memory matrices are
//! accepted. Each vertex draws its walks from its own ChaCha8 stream
//! (`seed`, stream = vertex id), so estimates do not depend on scheduling.
//!
//! Estimation error in `Pᵗ_jj` is damped inside the first-passage recursion
//! but can grow by up to a factor `t` in the final expectation. Masses are
//! only clamped into the probability left unassigned; no further correction
//! is attempted.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{HittingProfile, Order, ProfileStart};
use crate::error::{check_len, Error, Result};
use crate::exact::{
    expectation_from_masses, first_passage_masses, return_probabilities, MassRepair,
};
use crate::transition::{TransitionMatrix, TransitionOperator};

const MAGIC: &[u8; 8] = b"THRPEST1";
const HEADER_BYTES: usize = 8 + 4 * 8;

/// Smallest `L` with `2·exp(-2ε²L) ≤ ρ`, i.e. `⌈ln(2/ρ) / (2ε²)⌉`.
pub fn hoeffding_walk_count(eps: f64, rho: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) || !(rho > 0.0 && rho < 1.0) {
        return Err(Error::validation(format!(
            "eps and rho must lie in (0, 1), got eps={eps} rho={rho}"
        )));
    }
    let exact = (2.0 / rho).ln() / (2.0 * eps * eps);
    // absorb rounding in ln() so integral results do not round up
    Ok(((exact - 1e-9).ceil() as u64).max(1))
}

/// Empirical return frequencies `μ(j, t)` for `t = 0..T-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnProbEstimate {
    pub n: usize,
    pub horizon: usize,
    pub walks: u64,
    pub seed: u64,
    mu: Vec<f64>,
}

impl ReturnProbEstimate {
    /// Builds an "estimate" holding the exact diagonals of `Pᵗ`.
    pub fn exact(p: &TransitionMatrix, horizon: usize) -> Result<Self> {
        Ok(ReturnProbEstimate {
            n: p.n(),
            horizon,
            walks: 0,
            seed: 0,
            mu: return_probabilities(p, horizon)?,
        })
    }

    pub fn get(&self, j: usize, t: usize) -> f64 {
        self.mu[j * self.horizon + t]
    }

    /// Row-major `[j * T + t]` values.
    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    /// Little-endian binary: magic, `n`, `T`, `L`, `seed` as u64, then the
    /// `n × T` matrix of f64 values row by row.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.mu.len() * 8);
        out.extend_from_slice(MAGIC);
        for v in [self.n as u64, self.horizon as u64, self.walks, self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for x in &self.mu {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES || &bytes[..8] != MAGIC {
            return Err(Error::validation("not a return-probability estimate file"));
        }
        let word = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap());
        let (n, horizon, walks, seed) = (word(0) as usize, word(1) as usize, word(2), word(3));
        let cells = n
            .checked_mul(horizon)
            .ok_or_else(|| Error::validation("estimate dimensions overflow"))?;
        check_len(HEADER_BYTES + cells * 8, bytes.len())?;
        let mu = bytes[HEADER_BYTES..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ReturnProbEstimate {
            n,
            horizon,
            walks,
            seed,
            mu,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes =
            fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&bytes)
    }
}

/// Runs `walks` independent walks of `T-1` steps from every vertex and
/// records how often each returns to its origin at each step.
pub fn sample_return_probabilities<O: TransitionOperator + ?Sized>(
    op: &O,
    horizon: usize,
    walks: u64,
    seed: u64,
) -> Result<ReturnProbEstimate> {
    let p = op.in_memory().ok_or_else(|| {
        Error::Unsupported(format!(
            "walk sampling needs random row access; the {} backend cannot provide it",
            op.backend()
        ))
    })?;
    if horizon == 0 || walks == 0 {
        return Err(Error::validation("horizon and walk count must be positive"));
    }
    let n = p.n();
    let cumulative = cumulative_rows(p);
    let mut mu = vec![0.0; n * horizon];
    mu.par_chunks_mut(horizon).enumerate().for_each(|(j, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let mut returns = vec![0u64; horizon];
        for _ in 0..walks {
            let mut at = j;
            for slot in returns.iter_mut().skip(1) {
                at = next_vertex(p, &cumulative, at, &mut rng);
                if at == j {
                    *slot += 1;
                }
            }
        }
        row[0] = 1.0;
        for t in 1..horizon {
            row[t] = returns[t] as f64 / walks as f64;
        }
    });
    Ok(ReturnProbEstimate {
        n,
        horizon,
        walks,
        seed,
        mu,
    })
}

fn cumulative_rows(p: &TransitionMatrix) -> Vec<f64> {
    let mut cum = Vec::with_capacity(p.nnz());
    for u in 0..p.n() {
        let mut acc = 0.0;
        for &prob in p.row(u).1 {
            acc += prob;
            cum.push(acc);
        }
    }
    cum
}

fn next_vertex(p: &TransitionMatrix, cumulative: &[f64], u: usize, rng: &mut ChaCha8Rng) -> usize {
    let (targets, _) = p.row(u);
    let base = p.offsets()[u];
    let cum = &cumulative[base..base + targets.len()];
    let x: f64 = rng.random::<f64>() * cum[cum.len() - 1];
    let k = cum.partition_point(|&c| c <= x).min(targets.len() - 1);
    targets[k] as usize
}

/// First-passage hitting times with `Pᵗ_jj` taken from `est`; `Pᵗ_ij` is
/// still propagated exactly from `δ_start`.
pub fn hitting_via_sampled_diagonal(
    p: &TransitionMatrix,
    start: usize,
    horizon: usize,
    est: &ReturnProbEstimate,
) -> Result<HittingProfile> {
    check_len(p.n(), est.n)?;
    check_len(horizon, est.horizon)?;
    let masses = first_passage_masses(p, start, horizon, &est.mu, MassRepair::Clamp)?;
    Ok(HittingProfile {
        start: ProfileStart::Vertex(start),
        horizon,
        order: Order::Zero,
        values: expectation_from_masses(p.n(), start, horizon, &masses),
    })
}
