use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Best iterate kept when an LRA policy iteration hits its round cap.
#[derive(Debug, Clone, PartialEq)]
pub struct LraBestSoFar {
    pub gain: Vec<f64>,
    pub policy: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("discount factor {0} is outside (0, 1)")]
    Discount(f64),

    #[error("linear system is numerically singular ({context}, residual {residual:e})")]
    Singular { context: String, residual: f64 },

    #[error("illegal policy: {0}")]
    IllegalPolicy(String),

    #[error("{what}: iteration limit of {limit} rounds exceeded")]
    IterationLimit {
        what: &'static str,
        limit: usize,
        best: Option<Box<LraBestSoFar>>,
    },

    #[error(
        "RPPI did not certify a policy pair within {outer} outer iterations \
         (last discount {last_gamma}, last PPE gap {last_gap:e})"
    )]
    RppiExhausted {
        outer: usize,
        last_gamma: f64,
        last_gap: f64,
    },

    #[error(
        "{algorithm} did not reach the reference value within {iterations} iterations \
         (last estimate {last_estimate})"
    )]
    BaselineExhausted {
        algorithm: &'static str,
        iterations: usize,
        last_estimate: f64,
    },

    #[error("enumeration needs {needed:e} evaluations, budget is {budget:e}")]
    Budget { needed: f64, budget: f64 },

    #[error("deadline exceeded")]
    Timeout,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
