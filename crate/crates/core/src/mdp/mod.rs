//! Exact solvers for one-player MDPs: discounted policy iteration and
//! multichain long-run average (gain/bias) policy iteration.
//!
//! These are the building blocks for the game solvers: fixing one player's
//! pure positional policy in a turn-based game leaves an MDP for the other.

mod chain;
mod discounted;
mod lra;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PurePolicy, SIMPLEX_TOL};

pub use chain::{chain_decompose, evaluate_chain, ChainDecomposition};
pub(crate) use discounted::noise_floor as discounted_noise_floor;
pub use discounted::{evaluate_discounted, solve_discounted_mdp, solve_discounted_mdp_with, DiscountedSolution};
pub use lra::{
    evaluate_policy_lra, improvement_round, solve_lra_mdp, solve_lra_mdp_from, GainBias, LraSolution,
};

/// Cap on improvement rounds for every policy iteration in this module.
pub const MAX_IMPROVEMENT_ROUNDS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimize {
    Max,
    Min,
}

impl Optimize {
    /// +1 for maximization, -1 for minimization.
    pub(crate) fn sign(self) -> f64 {
        match self {
            Optimize::Max => 1.0,
            Optimize::Min => -1.0,
        }
    }
}

/// An action with a sparse successor list `(state, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpAction {
    pub reward: f64,
    pub next: Vec<(usize, f64)>,
}

impl MdpAction {
    pub fn new(reward: f64, next: Vec<(usize, f64)>) -> Self {
        MdpAction { reward, next }
    }

    pub fn dirac(reward: f64, to: usize) -> Self {
        MdpAction { reward, next: vec![(to, 1.0)] }
    }

    pub fn expect(&self, values: &[f64]) -> f64 {
        self.next.iter().map(|&(t, p)| p * values[t]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub actions: Vec<Vec<MdpAction>>,
    pub optimize: Optimize,
}

impl Mdp {
    pub fn new(actions: Vec<Vec<MdpAction>>, optimize: Optimize) -> Result<Self> {
        let m = Mdp { actions, optimize };
        m.validate()?;
        Ok(m)
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        for (s, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(Error::Parse(format!("MDP state {s} has no actions")));
            }
            for (a, act) in acts.iter().enumerate() {
                let mut sum = 0.0;
                for &(t, p) in &act.next {
                    if t >= n || !(p >= 0.0) || !p.is_finite() {
                        return Err(Error::Parse(format!("bad successor ({t}, {p}) at ({s},{a})")));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > SIMPLEX_TOL || !act.reward.is_finite() {
                    return Err(Error::Parse(format!("action ({s},{a}) is not a distribution")));
                }
            }
        }
        Ok(())
    }

    pub fn check_policy(&self, policy: &PurePolicy) -> Result<()> {
        policy.check_legal(self.actions.iter().map(Vec::len))
    }

    /// Transition rows and rewards of the Markov chain a policy induces.
    pub fn fix<'a>(&'a self, policy: &PurePolicy) -> (Vec<&'a [(usize, f64)]>, Vec<f64>) {
        self.actions
            .iter()
            .zip(&policy.choice)
            .map(|(acts, &c)| (acts[c].next.as_slice(), acts[c].reward))
            .unzip()
    }
}

/// Index of the best entry by `sign * value`, preferring the lowest index
/// among entries within `slack` of the best.
pub(crate) fn best_lowest_index(values: impl Iterator<Item = f64> + Clone, sign: f64, slack: f64) -> (usize, f64) {
    let top = values.clone().map(|v| sign * v).fold(f64::NEG_INFINITY, f64::max);
    let idx = values.clone().position(|v| sign * v >= top - slack).unwrap_or(0);
    (idx, top)
}
