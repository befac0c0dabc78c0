//! Exact mean truncated hitting times for small graphs.
//!
//! Three independent routes are provided so they can check each other:
//!
//! * [`exact_recursive`]: `H⁽ᵗ⁾ = 1 + P·H⁽ᵗ⁻¹⁾` with the diagonal pinned to 0,
//! * [`exact_first_passage`]: first-passage masses from the renewal identity
//!   `P*ᵗ_ij = Pᵗ_ij - Σ_{k<t} P*ᵏ_ij · Pᵗ⁻ᵏ_jj`, then the expectation over
//!   arrival times with leftover mass charged `T`,
//! * [`brute_force_paths`]: enumerate every walk of length `T-1` and record
//!   where each vertex is first reached.

use crate::dense::{Multiplier, Square};
use crate::engine::{HittingProfile, Order, ProfileStart};
use crate::error::{check_len, Error, Result};
use crate::transition::{ProbabilityVector, TransitionMatrix};

/// Largest `n` accepted by [`exact_recursive`].
pub const RECURSIVE_CAP: usize = 2000;
/// Largest `n` accepted by the dense-power first-passage oracle.
pub const FIRST_PASSAGE_CAP: usize = 500;
/// Default limit on the number of enumerated walk prefixes.
pub const PATH_BUDGET: u64 = 10_000_000;

/// First-passage masses more negative than this indicate a real inconsistency
/// rather than cancellation noise.
const NEGATIVE_MASS_TOL: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-9;

/// Hitting times for every (start, target) pair. Entry `(i, j)` is `h_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingMatrix {
    n: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl HittingMatrix {
    /// Checks the zero diagonal and the `[1, T]` range off the diagonal.
    pub fn new(n: usize, horizon: usize, values: Vec<f64>) -> Result<Self> {
        check_len(n * n, values.len())?;
        let t = horizon as f64;
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                let ok = if i == j {
                    v == 0.0
                } else {
                    v >= 1.0 - BOUND_TOL && v <= t + BOUND_TOL
                };
                if !ok {
                    return Err(Error::Numerical(format!(
                        "hitting time h[{i},{j}] = {v} violates the [1, {horizon}] bound"
                    )));
                }
            }
        }
        Ok(HittingMatrix { n, horizon, values })
    }

    pub fn from_profiles(profiles: &[HittingProfile]) -> Result<Self> {
        let n = profiles.len();
        let horizon = profiles.first().map_or(0, |p| p.horizon);
        let mut values = Vec::with_capacity(n * n);
        for (i, prof) in profiles.iter().enumerate() {
            check_len(n, prof.values.len())?;
            if prof.start != ProfileStart::Vertex(i) || prof.horizon != horizon {
                return Err(Error::validation(format!(
                    "profile {i} does not start at vertex {i} with horizon {horizon}"
                )));
            }
            values.extend_from_slice(&prof.values);
        }
        HittingMatrix::new(n, horizon, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn profile(&self, i: usize, order: Order) -> HittingProfile {
        HittingProfile {
            start: ProfileStart::Vertex(i),
            horizon: self.horizon,
            order,
            values: self.row(i).to_vec(),
        }
    }

    /// Relabels vertices: entry `(perm[i], perm[j])` of the result is `(i, j)`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[perm[i] * n + perm[j]] = self.get(i, j);
            }
        }
        HittingMatrix {
            n,
            horizon: self.horizon,
            values,
        }
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::validation("horizon T must be at least 1"));
    }
    Ok(())
}

fn check_cap(what: &str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::Resource(format!(
            "{what} needs dense n×n storage; n={n} exceeds the cap of {cap}"
        )));
    }
    Ok(())
}

pub fn exact_recursive(p: &TransitionMatrix, horizon: usize) -> Result<HittingMatrix> {
    exact_recursive_capped(p, horizon, RECURSIVE_CAP)
}

pub fn exact_recursive_capped(
    p: &TransitionMatrix,
    horizon: usize,
    cap: usize,
) -> Result<HittingMatrix> {
    check_horizon(horizon)?;
    let n = p.n();
    check_cap("recursive oracle", n, cap)?;
    let mul = Multiplier::new(p);
    let mut h = Square::zeros(n);
    let mut next = Square::zeros(n);
    for t in 1..=horizon {
        mul.left(&h, &mut next);
        let data = next.as_mut_slice();
        // rows of P sum to 1 only up to rounding; keep entries within [1, t]
        let cap = t as f64;
        for x in data.iter_mut() {
            *x = (*x + 1.0).min(cap);
        }
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        std::mem::swap(&mut h, &mut next);
    }
    HittingMatrix::new(n, horizon, h.into_vec())
}

/// Return probabilities `Pᵗ_jj` for `t = 0..T-1`, laid out `[j * T + t]`,
/// from dense matrix powers.
pub fn return_probabilities(p: &TransitionMatrix, horizon: usize) -> Result<Vec<f64>> {
    check_horizon(horizon)?;
    let n = p.n();
    check_cap("dense matrix powers", n, FIRST_PASSAGE_CAP)?;
    let mut out = vec![0.0; n * horizon];
    for j in 0..n {
        out[j * horizon] = 1.0;
    }
    if horizon == 1 {
        return Ok(out);
    }
    let mul = Multiplier::new(p);
    let mut power = Square::from_vec(n, p.to_dense());
    let mut next = Square::zeros(n);
    for t in 1..horizon {
        for j in 0..n {
            out[j * horizon + t] = power.get(j, j);
        }
        if t + 1 < horizon {
            mul.right(&power, &mut next);
            std::mem::swap(&mut power, &mut next);
        }
    }
    Ok(out)
}

/// How to repair first-passage masses that come out of range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MassRepair {
    /// Exact inputs: tolerate tiny negative cancellation noise only.
    Strict,
    /// Estimated inputs: clamp each mass into what probability is left.
    Clamp,
}

/// First-passage masses from `start` to every vertex. Entry `[j * T + (t-1)]`
/// is the probability of first reaching `j` at step `t` for `t = 1..T`, the
/// last slot holding the mass not reached before `T`. The start's own row
/// is left zero since it is reached at step 0.
pub(crate) fn first_passage_masses(
    p: &TransitionMatrix,
    start: usize,
    horizon: usize,
    returns: &[f64],
    repair: MassRepair,
) -> Result<Vec<f64>> {
    let n = p.n();
    check_horizon(horizon)?;
    check_len(n * horizon, returns.len())?;
    // reach[t * n + j] = Pᵗ[start, j] for t = 1..T-1
    let mut reach = vec![0.0; horizon * n];
    let mut dist = ProbabilityVector::delta(n, start)?;
    for t in 1..horizon {
        dist = p.apply_transposed(&dist)?;
        reach[t * n..(t + 1) * n].copy_from_slice(dist.as_slice());
    }
    let mut masses = vec![0.0; n * horizon];
    for j in (0..n).filter(|&j| j != start) {
        let ret = &returns[j * horizon..(j + 1) * horizon];
        let m = &mut masses[j * horizon..(j + 1) * horizon];
        let mut assigned = 0.0f64;
        for t in 1..horizon {
            let mut mass = reach[t * n + j];
            for k in 1..t {
                mass -= m[k - 1] * ret[t - k];
            }
            mass = match repair {
                MassRepair::Strict => {
                    if mass < -NEGATIVE_MASS_TOL {
                        return Err(Error::Numerical(format!(
                            "first-passage mass {mass} for {start}->{j} at t={t}"
                        )));
                    }
                    mass.max(0.0)
                }
                MassRepair::Clamp => mass.clamp(0.0, (1.0 - assigned).max(0.0)),
            };
            m[t - 1] = mass;
            assigned += mass;
        }
        let residual = 1.0 - assigned;
        if repair == MassRepair::Strict && residual < -NEGATIVE_MASS_TOL {
            return Err(Error::Numerical(format!(
                "first-passage masses for {start}->{j} sum to {assigned}"
            )));
        }
        m[horizon - 1] = residual.max(0.0);
    }
    Ok(masses)
}

pub(crate) fn expectation_from_masses(
    n: usize,
    start: usize,
    horizon: usize,
    masses: &[f64],
) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if j == start {
                return 0.0;
            }
            masses[j * horizon..(j + 1) * horizon]
                .iter()
                .enumerate()
                .map(|(k, m)| (k + 1) as f64 * m)
                .sum::<f64>()
                .clamp(1.0, horizon as f64)
        })
        .collect()
}

/// First-passage distributions from `start`: `result[j][t-1]` is the
/// probability of first reaching `j` at step `t`, with step `T` absorbing
/// everything not reached earlier.
pub fn first_passage_distributions(
    p: &TransitionMatrix,
    start: usize,
    horizon: usize,
) -> Result<Vec<Vec<f64>>> {
    let returns = return_probabilities(p, horizon)?;
    let masses = first_passage_masses(p, start, horizon, &returns, MassRepair::Strict)?;
    Ok(masses.chunks(horizon).map(<[f64]>::to_vec).collect())
}

pub fn exact_first_passage(
    p: &TransitionMatrix,
    start: usize,
    horizon: usize,
) -> Result<HittingProfile> {
    let returns = return_probabilities(p, horizon)?;
    first_passage_profile(p, start, horizon, &returns)
}

fn first_passage_profile(
    p: &TransitionMatrix,
    start: usize,
    horizon: usize,
    returns: &[f64],
) -> Result<HittingProfile> {
    let masses = first_passage_masses(p, start, horizon, returns, MassRepair::Strict)?;
    Ok(HittingProfile {
        start: ProfileStart::Vertex(start),
        horizon,
        order: Order::Zero,
        values: expectation_from_masses(p.n(), start, horizon, &masses),
    })
}

/// [`exact_first_passage`] for every start, sharing the matrix powers.
pub fn exact_first_passage_matrix(p: &TransitionMatrix, horizon: usize) -> Result<HittingMatrix> {
    let returns = return_probabilities(p, horizon)?;
    let profiles = (0..p.n())
        .map(|i| first_passage_profile(p, i, horizon, &returns))
        .collect::<Result<Vec<_>>>()?;
    HittingMatrix::from_profiles(&profiles)
}

/// Number of walk prefixes of length `0..T-1` starting at `start`, i.e. the
/// number of nodes [`brute_force_paths`] visits.
pub fn walk_prefix_count(p: &TransitionMatrix, start: usize, horizon: usize) -> f64 {
    let n = p.n();
    let mut counts = vec![0.0f64; n];
    counts[start] = 1.0;
    let mut total = 1.0;
    for _ in 1..horizon {
        let mut next = vec![0.0f64; n];
        for (u, &c) in counts.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for &v in p.row(u).0 {
                next[v as usize] += c;
            }
        }
        total += next.iter().sum::<f64>();
        counts = next;
    }
    total
}

/// Enumerates every walk of length `T-1` from `start` depth first,
/// accumulating the probability of each first arrival.
pub fn brute_force_paths(
    p: &TransitionMatrix,
    start: usize,
    horizon: usize,
    budget: u64,
) -> Result<HittingProfile> {
    check_horizon(horizon)?;
    let n = p.n();
    if start >= n {
        return Err(Error::validation(format!(
            "start vertex {start} out of range for a graph with {n} vertices"
        )));
    }
    let walks = walk_prefix_count(p, start, horizon);
    if walks > budget as f64 {
        return Err(Error::Resource(format!(
            "enumerating {walks:.3e} walk prefixes exceeds the budget of {budget}"
        )));
    }

    struct Frame {
        vertex: usize,
        depth: usize,
        prob: f64,
        next_edge: usize,
    }

    let mut on_path = vec![0u32; n];
    let mut first_mass = vec![0.0; n];
    let mut first_time_mass = vec![0.0; n];
    let mut arrive = |v: usize, depth: usize, prob: f64, on_path: &mut [u32]| {
        if on_path[v] == 0 {
            first_mass[v] += prob;
            first_time_mass[v] += depth as f64 * prob;
        }
        on_path[v] += 1;
    };

    let max_depth = horizon - 1;
    arrive(start, 0, 1.0, &mut on_path);
    let mut stack = vec![Frame {
        vertex: start,
        depth: 0,
        prob: 1.0,
        next_edge: 0,
    }];
    while let Some(top) = stack.last_mut() {
        let (targets, probs) = p.row(top.vertex);
        if top.depth < max_depth && top.next_edge < targets.len() {
            let v = targets[top.next_edge] as usize;
            let prob = top.prob * probs[top.next_edge];
            let depth = top.depth + 1;
            top.next_edge += 1;
            arrive(v, depth, prob, &mut on_path);
            stack.push(Frame {
                vertex: v,
                depth,
                prob,
                next_edge: 0,
            });
        } else {
            on_path[top.vertex] -= 1;
            stack.pop();
        }
    }

    let t = horizon as f64;
    let values = (0..n)
        .map(|j| first_time_mass[j] + t * (1.0 - first_mass[j]).max(0.0))
        .collect();
    Ok(HittingProfile {
        start: ProfileStart::Vertex(start),
        horizon,
        order: Order::Zero,
        values,
    })
}
