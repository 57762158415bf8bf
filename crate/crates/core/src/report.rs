use serde::{Deserialize, Serialize};

use crate::model::PurePolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rppi,
    Rvi,
    Rrvi,
    Brute,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rppi => "rppi",
            Algorithm::Rvi => "rvi",
            Algorithm::Rrvi => "rrvi",
            Algorithm::Brute => "brute",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one solver run on an RMDP.
///
/// `values`, when present, is indexed by RMDP state and
/// `values[initial] == value_at_initial` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub value_at_initial: f64,
    pub values: Option<Vec<f64>>,
    pub agent_policy: PurePolicy,
    pub env_policy: Option<PurePolicy>,
    pub algorithm: Algorithm,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub final_gamma: Option<f64>,
    pub wall_clock_seconds: f64,
}

impl SolveReport {
    /// Checks the report's internal consistency against the model it came from.
    pub fn is_consistent(&self, initial: usize, n_states: usize) -> bool {
        let values_ok = match &self.values {
            Some(v) => v.len() == n_states && v[initial] == self.value_at_initial,
            None => true,
        };
        values_ok
            && self.agent_policy.len() == n_states
            && self.value_at_initial.is_finite()
            && self.wall_clock_seconds >= 0.0
    }
}

/// Rounds a duration to millisecond resolution.
pub fn millis(d: std::time::Duration) -> f64 {
    (d.as_secs_f64() * 1e3).round() / 1e3
}
