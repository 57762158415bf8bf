use nalgebra::{DMatrix, DVector};

use super::{best_lowest_index, Mdp, PurePolicy, MAX_IMPROVEMENT_ROUNDS};
use crate::error::{Error, Result};
use crate::linalg::solve;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedSolution {
    pub values: Vec<f64>,
    pub policy: PurePolicy,
    pub iterations: usize,
}

/// Values of a fixed policy where leaving state `s` is discounted by
/// `discounts[s]`: solves `(I - D P) V = r`.
pub fn evaluate_discounted(m: &Mdp, discounts: &[f64], policy: &PurePolicy) -> Result<Vec<f64>> {
    m.check_policy(policy)?;
    let n = m.n_states();
    let (rows, rewards) = m.fix(policy);
    let mut a = DMatrix::<f64>::identity(n, n);
    for (s, row) in rows.iter().enumerate() {
        for &(t, p) in row.iter() {
            a[(s, t)] -= discounts[s] * p;
        }
    }
    Ok(solve(a, &DVector::from_vec(rewards), "discounted evaluation")?.as_slice().to_vec())
}

/// Howard policy iteration for the γ-discounted criterion.
pub fn solve_discounted_mdp(m: &Mdp, gamma: f64, tol: f64) -> Result<DiscountedSolution> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Discount(gamma));
    }
    solve_discounted_mdp_with(m, &vec![gamma; m.n_states()], None, tol)
}

/// Policy iteration with a per-state discount. Factors of 1 are allowed as
/// long as every cycle of every policy passes a state with factor below 1.
///
/// A state switches only when some action beats its current one by more than
/// `tol` plus a float-noise floor proportional to the value magnitude.
pub fn solve_discounted_mdp_with(
    m: &Mdp,
    discounts: &[f64],
    init: Option<&PurePolicy>,
    tol: f64,
) -> Result<DiscountedSolution> {
    m.validate()?;
    if let Some(&d) = discounts.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
        return Err(Error::Discount(d));
    }
    let sign = m.optimize.sign();
    let mut policy = match init {
        Some(p) => {
            m.check_policy(p)?;
            p.clone()
        }
        None => PurePolicy::uniform(m.n_states(), 0),
    };
    let mut values = evaluate_discounted(m, discounts, &policy)?;
    for iterations in 1..=MAX_IMPROVEMENT_ROUNDS {
        let thr = tol + noise_floor(&values);
        let mut changed = false;
        for (s, acts) in m.actions.iter().enumerate() {
            let q = |a: &super::MdpAction| a.reward + discounts[s] * a.expect(&values);
            let current = sign * q(&acts[policy.choice[s]]);
            let (best, top) = best_lowest_index(acts.iter().map(q), sign, thr);
            if top > current + thr {
                policy.choice[s] = best;
                changed = true;
            }
        }
        if !changed {
            return Ok(DiscountedSolution { values, policy, iterations });
        }
        values = evaluate_discounted(m, discounts, &policy)?;
    }
    Err(Error::IterationLimit { what: "discounted policy iteration", limit: MAX_IMPROVEMENT_ROUNDS, best: None })
}

pub(crate) fn noise_floor(values: &[f64]) -> f64 {
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    64.0 * f64::EPSILON * scale
}
