//! Robust Bellman operator over polytope vertices and the value-iteration
//! baselines: discounted robust value iteration, RVI (discount ladder with the
//! Abel-mean estimate `(1 - γ) V_γ(s0)`) and RRVI (relative value iteration on
//! the undiscounted operator).
//!
//! RVI and RRVI carry no intrinsic stopping rule. They stop once their
//! estimate is within `stop_gap` of a reference value, normally the RPPI
//! value. RVI assumes every policy pair induces a unichain model; RRVI
//! additionally assumes aperiodicity. Neither assumption is checked.

use std::time::Instant;

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::model::{PurePolicy, Rmdp};
use crate::report::{millis, Algorithm, SolveReport};

/// Sweeps between deadline polls.
const POLL_EVERY: usize = 256;

/// Applies `T V(s) = max_a [ r(s,a) + γ min_{v ∈ V(s,a)} v·V ]`.
/// Returns the image and the greedy action per state (lowest index on ties).
pub fn robust_bellman(m: &Rmdp, values: &[f64], gamma: f64) -> (Vec<f64>, PurePolicy) {
    let mut out = Vec::with_capacity(m.n_states());
    let mut greedy = Vec::with_capacity(m.n_states());
    for s in 0..m.n_states() {
        let mut best = (f64::NEG_INFINITY, 0);
        for a in 0..m.n_actions() {
            let q = m.reward(s, a) + gamma * m.polytope(s, a).min_expectation(values).0;
            if q > best.0 {
                best = (q, a);
            }
        }
        out.push(best.0);
        greedy.push(best.1);
    }
    (out, PurePolicy::new(greedy))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Robust value iteration from `start` until successive iterates differ by
/// at most `tol (1 - γ) / (2γ)`, which puts the iterate within `tol` of the
/// fixed point.
fn discounted_vi(
    m: &Rmdp,
    gamma: f64,
    tol: f64,
    start: Vec<f64>,
    deadline: &Deadline,
) -> Result<(Vec<f64>, PurePolicy, usize)> {
    let stop = tol * (1.0 - gamma) / (2.0 * gamma);
    let mut values = start;
    let mut sweeps = 0;
    loop {
        let (next, greedy) = robust_bellman(m, &values, gamma);
        sweeps += 1;
        let delta = max_abs_diff(&next, &values);
        values = next;
        if delta <= stop {
            return Ok((values, greedy, sweeps));
        }
        if sweeps % POLL_EVERY == 0 {
            deadline.check()?;
        }
    }
}

pub fn solve_discounted_rmdp(m: &Rmdp, gamma: f64, tol: f64) -> Result<SolveReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Discount(gamma));
    }
    m.ensure_valid()?;
    let start = Instant::now();
    let (values, policy, sweeps) = discounted_vi(m, gamma, tol, vec![0.0; m.n_states()], &Deadline::none())?;
    Ok(SolveReport {
        value_at_initial: values[m.initial.0],
        values: Some(values),
        agent_policy: policy,
        env_policy: None,
        algorithm: Algorithm::Rvi,
        outer_iterations: 1,
        inner_iterations: sweeps,
        final_gamma: Some(gamma),
        wall_clock_seconds: millis(start.elapsed()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineOptions {
    pub reference_value: f64,
    pub stop_gap: f64,
    /// Discount rungs for RVI, sweeps for RRVI.
    pub max_iterations: usize,
    pub deadline: Deadline,
}

/// RVI: solve the discounted RMDP for γ = 1/2, 3/4, 7/8, ... and report
/// `(1 - γ) V_γ(s0)`, warm-starting each rung from the previous values.
pub fn rvi(m: &Rmdp, reference_value: f64, stop_gap: f64, max_outer: usize) -> Result<SolveReport> {
    rvi_with(m, &BaselineOptions { reference_value, stop_gap, max_iterations: max_outer, deadline: Deadline::none() })
}

pub fn rvi_with(m: &Rmdp, opts: &BaselineOptions) -> Result<SolveReport> {
    m.ensure_valid()?;
    let start = Instant::now();
    let s0 = m.initial.0;
    let mut gamma: f64 = 0.5;
    let mut values = vec![0.0; m.n_states()];
    let mut sweeps = 0;
    let mut last_estimate = f64::NAN;
    for k in 1..=opts.max_iterations {
        if gamma >= 1.0 {
            break;
        }
        // value error tol moves the estimate by at most (1 - γ) tol
        let tol = 0.1 * opts.stop_gap / (1.0 - gamma);
        let (v, policy, n) = discounted_vi(m, gamma, tol, values, &opts.deadline)?;
        values = v;
        sweeps += n;
        let normalized: Vec<f64> = values.iter().map(|x| (1.0 - gamma) * x).collect();
        last_estimate = normalized[s0];
        if (last_estimate - opts.reference_value).abs() <= opts.stop_gap {
            return Ok(SolveReport {
                value_at_initial: last_estimate,
                values: Some(normalized),
                agent_policy: policy,
                env_policy: None,
                algorithm: Algorithm::Rvi,
                outer_iterations: k,
                inner_iterations: sweeps,
                final_gamma: Some(gamma),
                wall_clock_seconds: millis(start.elapsed()),
            });
        }
        gamma = (1.0 + gamma) / 2.0;
    }
    Err(Error::BaselineExhausted { algorithm: "RVI", iterations: opts.max_iterations, last_estimate })
}

/// RRVI: `h ← T₁ h − (T₁ h)(s0)`, estimating the gain by `(T₁ h)(s0)`.
pub fn rrvi(m: &Rmdp, reference_value: f64, stop_gap: f64, max_iters: usize) -> Result<SolveReport> {
    rrvi_with(m, &BaselineOptions { reference_value, stop_gap, max_iterations: max_iters, deadline: Deadline::none() })
}

pub fn rrvi_with(m: &Rmdp, opts: &BaselineOptions) -> Result<SolveReport> {
    m.ensure_valid()?;
    let start = Instant::now();
    let s0 = m.initial.0;
    let mut h = vec![0.0; m.n_states()];
    let mut last_estimate = f64::NAN;
    for k in 1..=opts.max_iterations {
        let (th, policy) = robust_bellman(m, &h, 1.0);
        last_estimate = th[s0];
        if (last_estimate - opts.reference_value).abs() <= opts.stop_gap {
            return Ok(SolveReport {
                value_at_initial: last_estimate,
                values: None,
                agent_policy: policy,
                env_policy: None,
                algorithm: Algorithm::Rrvi,
                outer_iterations: 1,
                inner_iterations: k,
                final_gamma: None,
                wall_clock_seconds: millis(start.elapsed()),
            });
        }
        h = th.iter().map(|x| x - last_estimate).collect();
        if k % POLL_EVERY == 0 {
            opts.deadline.check()?;
        }
    }
    Err(Error::BaselineExhausted { algorithm: "RRVI", iterations: opts.max_iterations, last_estimate })
}
