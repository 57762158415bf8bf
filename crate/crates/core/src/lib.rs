//! Solvers for polytopic robust MDPs under long-run average and discounted
//! rewards.
//!
//! An RMDP whose uncertainty sets are polytopes given by vertex lists reduces
//! in linear time to a turn-based stochastic game ([`reduction`]). The game
//! is solved by robust polytopic policy iteration ([`game::rppi`]): discounted
//! strategy iteration with a discount ladder approaching 1, certified at each
//! rung by solving the two long-run average MDPs obtained by fixing either
//! player's policy. Value-iteration baselines ([`baselines`]), seeded
//! benchmark generators ([`benchgen`]) and a brute-force oracle ([`oracle`])
//! complete the toolkit.

pub mod baselines;
pub mod benchgen;
mod deadline;
pub mod error;
pub mod fixtures;
pub mod game;
mod linalg;
pub mod mdp;
pub mod model;
pub mod oracle;
pub mod reduction;
pub mod report;

pub use deadline::Deadline;
pub use error::{Error, Result};
pub use linalg::LINSOLVE_TOL;
pub use model::{Distribution, Polytope, PurePolicy, Rmdp, Tbsg, VertexSelection};
pub use report::{Algorithm, SolveReport};
