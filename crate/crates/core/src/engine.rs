//! Approximate mean truncated hitting times from one start distribution to
//! every vertex.
//!
//! The order-0 engine treats the events "the walk is not at `j` at step k" as
//! independent across k. It keeps three length-n vectors:
//!
//! * `p`: the walk distribution after `t` steps,
//! * `f`: the running product `Π_{k≤t} (1 - p⁽ᵏ⁾)`, the approximate
//!   probability that `j` has not been visited yet,
//! * `h`: the partial expectation `Σ_{k≤t} k · p⁽ᵏ⁾ ∘ f⁽ᵏ⁻¹⁾`.
//!
//! After `T-1` steps the mass that never arrived is charged the horizon:
//! `h ← h + T·f`. Each step is one transposed matrix-vector product, so the
//! whole run is `T-1` passes over the edges plus `O(Tn)` vector work.
//!
//! The order-1 engine replaces the independence assumption with a first-order
//! Markov chain over the "not at `j`" events. Using
//! `P(X_k = j, X_{k-1} = j) = p⁽ᵏ⁻¹⁾[j] · P_jj`, the conditional arrival
//! probability at step k is
//!
//! ```text
//! c_k = (p⁽ᵏ⁾[j] - p⁽ᵏ⁻¹⁾[j]·P_jj) / (1 - p⁽ᵏ⁻¹⁾[j])
//! ```
//!
//! and the running product becomes `Π (1 - c_k)`. When the denominator drops
//! below `1e-15` the walk is at `j` almost surely and `c_k` is taken as 1.
//! This needs the diagonal of `P` and the previous distribution on top of the
//! order-0 state.

use std::fmt;
use std::str::FromStr;

use crate::dense::{Multiplier, Square};
use crate::error::{check_len, Error, Result};
use crate::exact::HittingMatrix;
use crate::transition::{ProbabilityVector, TransitionMatrix, TransitionOperator};

/// Horizon used when none is given.
pub const DEFAULT_HORIZON: usize = 10;

const DENOM_FLOOR: f64 = 1e-15;

/// Which approximation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Order {
    /// Independent not-yet-hit events.
    #[default]
    Zero,
    /// First-order Markov dependence between consecutive events.
    One,
}

impl Order {
    pub fn as_u8(self) -> u8 {
        match self {
            Order::Zero => 0,
            Order::One => 1,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Order::Zero),
            "1" => Ok(Order::One),
            other => Err(Error::validation(format!(
                "approximation order must be 0 or 1, got {other:?}"
            ))),
        }
    }
}

impl serde::Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

/// How the walk is started.
#[derive(Debug, Clone, PartialEq)]
pub enum StartKind {
    Delta(usize),
    Uniform,
    /// Nonnegative weights, normalized on use.
    Custom(Vec<f64>),
}

pub fn start_distribution(n: usize, kind: &StartKind) -> Result<ProbabilityVector> {
    match kind {
        StartKind::Delta(i) => ProbabilityVector::delta(n, *i),
        StartKind::Uniform => ProbabilityVector::uniform(n),
        StartKind::Custom(w) => {
            check_len(n, w.len())?;
            ProbabilityVector::from_weights(w)
        }
    }
}

/// Identifies the start of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileStart {
    Vertex(usize),
    Distribution,
}

impl serde::Serialize for ProfileStart {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ProfileStart::Vertex(v) => s.serialize_u64(*v as u64),
            ProfileStart::Distribution => s.serialize_str("distribution"),
        }
    }
}

/// Mean truncated hitting times, in steps, from one start to every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingProfile {
    pub start: ProfileStart,
    pub horizon: usize,
    pub order: Order,
    pub values: Vec<f64>,
}

/// The per-vertex state of the order-0 iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTriple {
    pub h: Vec<f64>,
    pub p: Vec<f64>,
    pub f: Vec<f64>,
}

impl StateTriple {
    /// `h = 0`, `p = start`, `f = 1 - start`.
    pub fn new(start: ProbabilityVector) -> Self {
        let p = start.into_inner();
        let f = p.iter().map(|x| 1.0 - x).collect();
        StateTriple {
            h: vec![0.0; p.len()],
            p,
            f,
        }
    }

    /// Takes step `t`, leaving `p = p⁽ᵗ⁾`, `h = h⁽ᵗ⁾`, `f = f⁽ᵗ⁾`.
    pub fn advance<O: TransitionOperator + ?Sized>(&mut self, op: &O, t: usize) -> Result<()> {
        op.step_in_place(&mut self.p)?;
        let weight = t as f64;
        for ((h, f), &p) in self.h.iter_mut().zip(self.f.iter_mut()).zip(&self.p) {
            *h += weight * p * *f;
            *f *= 1.0 - p;
        }
        Ok(())
    }

    /// Charges the unvisited mass the horizon and returns `h⁽ᵀ⁾`.
    pub fn finish(mut self, horizon: usize) -> Vec<f64> {
        let weight = horizon as f64;
        // the weights telescope to at most 1, so only rounding can pass T
        for (h, f) in self.h.iter_mut().zip(&self.f) {
            *h = (*h + weight * f).min(weight);
        }
        self.h
    }
}

fn check_run<O: TransitionOperator + ?Sized>(
    op: &O,
    start: &ProbabilityVector,
    horizon: usize,
) -> Result<ProfileStart> {
    check_len(op.n(), start.len())?;
    if horizon == 0 {
        return Err(Error::validation("horizon T must be at least 1"));
    }
    Ok(start
        .point_mass()
        .map_or(ProfileStart::Distribution, ProfileStart::Vertex))
}

pub fn approx_hitting_order0<O: TransitionOperator + ?Sized>(
    op: &O,
    start: ProbabilityVector,
    horizon: usize,
) -> Result<HittingProfile> {
    approx_hitting_order0_observed(op, start, horizon, |_, _| {})
}

/// Order-0 run that hands the state to `observe` after initialization
/// (`t = 0`) and after every step `t = 1..T-1`.
pub fn approx_hitting_order0_observed<O, F>(
    op: &O,
    start: ProbabilityVector,
    horizon: usize,
    mut observe: F,
) -> Result<HittingProfile>
where
    O: TransitionOperator + ?Sized,
    F: FnMut(usize, &StateTriple),
{
    let label = check_run(op, &start, horizon)?;
    let mut state = StateTriple::new(start);
    observe(0, &state);
    for t in 1..horizon {
        state.advance(op, t)?;
        observe(t, &state);
    }
    Ok(HittingProfile {
        start: label,
        horizon,
        order: Order::Zero,
        values: state.finish(horizon),
    })
}

pub fn approx_hitting_order1<O: TransitionOperator + ?Sized>(
    op: &O,
    start: ProbabilityVector,
    horizon: usize,
) -> Result<HittingProfile> {
    let label = check_run(op, &start, horizon)?;
    let diag = op.diagonal()?;
    let mut p = start.into_inner();
    let mut not_hit: Vec<f64> = p.iter().map(|x| 1.0 - x).collect();
    let mut h = vec![0.0; p.len()];
    let mut prev = vec![0.0; p.len()];
    for t in 1..horizon {
        prev.copy_from_slice(&p);
        op.step_in_place(&mut p)?;
        let weight = t as f64;
        for j in 0..p.len() {
            let c = order1_arrival(p[j], prev[j], diag[j]);
            h[j] += weight * not_hit[j] * c;
            not_hit[j] *= 1.0 - c;
        }
    }
    let weight = horizon as f64;
    for (h, g) in h.iter_mut().zip(&not_hit) {
        *h = (*h + weight * g).min(weight);
    }
    Ok(HittingProfile {
        start: label,
        horizon,
        order: Order::One,
        values: h,
    })
}

/// Probability of arriving at `j` now given it was not occupied one step ago.
#[inline]
fn order1_arrival(now: f64, prev: f64, self_loop: f64) -> f64 {
    let denom = 1.0 - prev;
    if denom < DENOM_FLOOR {
        return 1.0;
    }
    ((now - prev * self_loop) / denom).clamp(0.0, 1.0)
}

pub fn approx_hitting<O: TransitionOperator + ?Sized>(
    op: &O,
    start: ProbabilityVector,
    horizon: usize,
    order: Order,
) -> Result<HittingProfile> {
    match order {
        Order::Zero => approx_hitting_order0(op, start, horizon),
        Order::One => approx_hitting_order1(op, start, horizon),
    }
}

/// Runs the approximation from every vertex at once. Row `i` of the result
/// is the profile for start `δ_i`; the walk distributions of all starts form
/// the rows of `Pᵗ` and advance together.
pub fn approx_all_starts(
    p: &TransitionMatrix,
    horizon: usize,
    order: Order,
) -> Result<HittingMatrix> {
    if horizon == 0 {
        return Err(Error::validation("horizon T must be at least 1"));
    }
    let n = p.n();
    let mul = Multiplier::new(p);
    let diag = match order {
        Order::Zero => vec![0.0; n],
        Order::One => p.diagonal()?,
    };
    let mut dist = Square::identity(n);
    let mut next = Square::zeros(n);
    let mut not_hit = Square::identity(n);
    not_hit
        .as_mut_slice()
        .iter_mut()
        .for_each(|x| *x = 1.0 - *x);
    let mut h = Square::zeros(n);
    for t in 1..horizon {
        mul.right(&dist, &mut next);
        let weight = t as f64;
        let rows = h
            .as_mut_slice()
            .chunks_mut(n)
            .zip(not_hit.as_mut_slice().chunks_mut(n))
            .zip(next.as_slice().chunks(n).zip(dist.as_slice().chunks(n)));
        for ((hr, gr), (nr, pr)) in rows {
            for j in 0..n {
                let c = match order {
                    Order::Zero => nr[j],
                    Order::One => order1_arrival(nr[j], pr[j], diag[j]),
                };
                hr[j] += weight * gr[j] * c;
                gr[j] *= 1.0 - c;
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }
    let weight = horizon as f64;
    for (x, g) in h.as_mut_slice().iter_mut().zip(not_hit.as_slice()) {
        *x = (*x + weight * g).min(weight);
    }
    HittingMatrix::new(n, horizon, h.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle3() -> TransitionMatrix {
        TransitionMatrix::from_dense(3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]).unwrap()
    }

    fn coin() -> TransitionMatrix {
        TransitionMatrix::from_dense(2, &[0.5; 4]).unwrap()
    }

    fn delta(n: usize, i: usize) -> ProbabilityVector {
        ProbabilityVector::delta(n, i).unwrap()
    }

    #[test]
    fn deterministic_cycle() {
        for order in [Order::Zero, Order::One] {
            let prof = approx_hitting(&cycle3(), delta(3, 0), 10, order).unwrap();
            assert_eq!(prof.values, vec![0.0, 1.0, 2.0]);
            assert_eq!(prof.start, ProfileStart::Vertex(0));
        }
    }

    #[test]
    fn fair_coin_chain() {
        // 1·0.5 + 2·0.25 + 3·0.25
        for order in [Order::Zero, Order::One] {
            let prof = approx_hitting(&coin(), delta(2, 0), 3, order).unwrap();
            assert!(
                (prof.values[1] - 1.75).abs() < 1e-15,
                "{order}: {:?}",
                prof.values
            );
            assert_eq!(prof.values[0], 0.0);
        }
    }

    #[test]
    fn unreachable_vertex_gets_horizon() {
        // 0 <-> 1, vertex 2 only points into the cycle
        let p = TransitionMatrix::from_dense(3, &[0., 1., 0., 1., 0., 0., 1., 0., 0.]).unwrap();
        for order in [Order::Zero, Order::One] {
            let prof = approx_hitting(&p, delta(3, 0), 7, order).unwrap();
            assert_eq!(prof.values[2], 7.0);
        }
    }

    #[test]
    fn horizon_one_gives_unit_times() {
        let prof = approx_hitting_order0(&coin(), delta(2, 1), 1).unwrap();
        assert_eq!(prof.values, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_horizon_and_dimension_errors() {
        assert!(matches!(
            approx_hitting_order0(&coin(), delta(2, 0), 0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            approx_hitting_order1(&coin(), delta(3, 0), 4),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn start_distributions() {
        assert_eq!(
            start_distribution(5, &StartKind::Delta(3))
                .unwrap()
                .as_slice(),
            &[0., 0., 0., 1., 0.]
        );
        assert_eq!(
            start_distribution(4, &StartKind::Uniform)
                .unwrap()
                .as_slice(),
            &[0.25; 4]
        );
        assert_eq!(
            start_distribution(3, &StartKind::Custom(vec![2., 0., 2.]))
                .unwrap()
                .as_slice(),
            &[0.5, 0., 0.5]
        );
        assert!(start_distribution(3, &StartKind::Delta(3)).is_err());
        assert!(start_distribution(3, &StartKind::Custom(vec![0.; 3])).is_err());
        assert!(start_distribution(3, &StartKind::Custom(vec![1.; 2])).is_err());
    }

    #[test]
    fn observer_sees_every_step() {
        let mut seen = Vec::new();
        approx_hitting_order0_observed(&coin(), delta(2, 0), 5, |t, s| {
            seen.push((t, s.f.clone()));
        })
        .unwrap();
        let ts: Vec<_> = seen.iter().map(|(t, _)| *t).collect();
        assert_eq!(ts, vec![0, 1, 2, 3, 4]);
        assert_eq!(seen[1].1, vec![0.0, 0.5]);
    }

    #[test]
    fn batch_matches_single_start() {
        let p = TransitionMatrix::from_dense(3, &[0.2, 0.5, 0.3, 0.0, 0.4, 0.6, 0.7, 0.3, 0.0])
            .unwrap();
        for order in [Order::Zero, Order::One] {
            let all = approx_all_starts(&p, 6, order).unwrap();
            for i in 0..3 {
                let one = approx_hitting(&p, delta(3, i), 6, order).unwrap();
                for j in 0..3 {
                    assert!((all.get(i, j) - one.values[j]).abs() < 1e-14);
                }
            }
        }
    }
}
