//! Core domain types: robust MDPs with vertex-listed polytopic uncertainty,
//! turn-based stochastic games, pure positional policies.
//!
//! Models are plain data with public fields so that malformed instances can be
//! built and inspected; [`validate_rmdp`] and [`validate_tbsg`] report every
//! violated invariant. Solvers validate their input before running.

mod json;
mod tbsg;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use json::{RmdpFile, TbsgFile};
pub use tbsg::{validate_tbsg, GameAction, Player, Tbsg};

/// Tolerance on `|sum(p) - 1|` for a probability vector.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s#{}", self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a#{}", self.0)
    }
}

/// A dense probability vector, one entry per state of the owning model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(pub Vec<f64>);

impl Distribution {
    pub fn dirac(n: usize, at: usize) -> Self {
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        Distribution(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Expectation of `values` under this distribution.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Nonzero entries as `(index, probability)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p != 0.0)
    }

    /// Componentwise equality within [`SIMPLEX_TOL`].
    pub fn approx_eq(&self, other: &Distribution) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (a - b).abs() <= SIMPLEX_TOL)
    }

    fn simplex_problem(&self) -> Option<SimplexProblem> {
        if let Some((i, &p)) = self.0.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
            return Some(SimplexProblem::Entry { index: i, value: p });
        }
        let s = self.sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Some(SimplexProblem::Sum(s));
        }
        None
    }

    /// Rescales to an exact simplex point when the sum is off by float noise.
    /// Vectors already summing to 1 up to a few ulps are left untouched so
    /// that serialization round-trips bit for bit.
    pub(crate) fn renormalize(&mut self) {
        let s = self.sum();
        if (s - 1.0).abs() > 16.0 * f64::EPSILON && (s - 1.0).abs() <= SIMPLEX_TOL {
            for p in &mut self.0 {
                *p /= s;
            }
        }
    }
}

enum SimplexProblem {
    Entry { index: usize, value: f64 },
    Sum(f64),
}

/// Uncertainty set given by its vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polytope {
    pub vertices: Vec<Distribution>,
}

impl Polytope {
    pub fn new(vertices: Vec<Distribution>) -> Self {
        Polytope { vertices }
    }

    pub fn singleton(d: Distribution) -> Self {
        Polytope { vertices: vec![d] }
    }

    /// Builds a polytope from candidate points, dropping points that repeat an
    /// earlier one within [`SIMPLEX_TOL`].
    pub fn dedup_from(points: Vec<Distribution>) -> Self {
        let mut vertices: Vec<Distribution> = Vec::with_capacity(points.len());
        for p in points {
            if !vertices.iter().any(|v| v.approx_eq(&p)) {
                vertices.push(p);
            }
        }
        Polytope { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Smallest expectation of `values` over the vertices, with the index of
    /// the first vertex attaining it.
    pub fn min_expectation(&self, values: &[f64]) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (j, v) in self.vertices.iter().enumerate() {
            let e = v.dot(values);
            if e < best.0 {
                best = (e, j);
            }
        }
        best
    }
}

/// Polytopic (s,a)-rectangular robust MDP.
///
/// `rewards[s][a]` and `polytopes[s][a]` are indexed by state then action.
/// Labels double as identifiers in the JSON format, so they must be unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Rmdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub initial: StateId,
    pub rewards: Vec<Vec<f64>>,
    pub polytopes: Vec<Vec<Polytope>>,
}

impl Rmdp {
    /// Builds a model with generated labels `s0, s1, ...` and `a0, a1, ...`.
    pub fn from_tables(
        initial: usize,
        rewards: Vec<Vec<f64>>,
        polytopes: Vec<Vec<Polytope>>,
    ) -> Self {
        let n = rewards.len();
        let m = rewards.first().map_or(0, Vec::len);
        Rmdp {
            states: (0..n).map(|i| format!("s{i}")).collect(),
            actions: (0..m).map(|i| format!("a{i}")).collect(),
            initial: StateId(initial),
            rewards,
            polytopes,
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn polytope(&self, s: usize, a: usize) -> &Polytope {
        &self.polytopes[s][a]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s][a]
    }

    pub fn total_vertices(&self) -> usize {
        self.polytopes.iter().flatten().map(Polytope::len).sum()
    }

    /// True when every uncertainty set is a single distribution.
    pub fn is_plain_mdp(&self) -> bool {
        self.polytopes.iter().flatten().all(|p| p.len() == 1)
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == label)
    }

    /// Errors with the full violation list unless the model is valid.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate_rmdp(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RmdpFile::from(self)).expect("model serializes")
    }

    /// Parses the canonical JSON format. Vertices whose sum is within
    /// [`SIMPLEX_TOL`] of one are renormalized; anything else is rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: RmdpFile = serde_json::from_str(text)?;
        let mut m = file.into_model()?;
        for p in m.polytopes.iter_mut().flatten() {
            for v in &mut p.vertices {
                v.renormalize();
            }
        }
        m.ensure_valid()?;
        Ok(m)
    }
}

/// One invariant violation found by validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    NoActions,
    DuplicateLabel(String),
    InitialOutOfRange(usize),
    InitialNotMax(usize),
    RewardShape { state: usize },
    PolytopeShape { state: usize },
    NonFiniteReward { state: usize, action: usize },
    EmptyPolytope { state: usize, action: usize },
    Dimension { state: usize, action: usize, vertex: usize, len: usize, expected: usize },
    NegativeEntry { state: usize, action: usize, vertex: usize, index: usize, value: f64 },
    Simplex { state: usize, action: usize, vertex: usize, sum: f64 },
    DuplicateVertex { state: usize, action: usize, first: usize, second: usize },
    NoLegalAction { state: usize },
    DuplicateActionId { state: usize, id: usize },
    ActionIdRange { state: usize, id: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoStates => write!(f, "model has no states"),
            NoActions => write!(f, "model has no actions"),
            DuplicateLabel(l) => write!(f, "label {l:?} used more than once"),
            InitialOutOfRange(s) => write!(f, "initial state {s} out of range"),
            InitialNotMax(s) => write!(f, "initial state {s} is not a Max state"),
            RewardShape { state } => write!(f, "reward row of state {state} has wrong length"),
            PolytopeShape { state } => write!(f, "polytope row of state {state} has wrong length"),
            NonFiniteReward { state, action } => {
                write!(f, "reward at ({state},{action}) is not finite")
            }
            EmptyPolytope { state, action } => write!(f, "empty polytope at ({state},{action})"),
            Dimension { state, action, vertex, len, expected } => write!(
                f,
                "vertex {vertex} at ({state},{action}) has {len} entries, expected {expected}"
            ),
            NegativeEntry { state, action, vertex, index, value } => write!(
                f,
                "vertex {vertex} at ({state},{action}) has invalid entry {value} at {index}"
            ),
            Simplex { state, action, vertex, sum } => {
                write!(f, "vertex {vertex} at ({state},{action}) sums to {sum}")
            }
            DuplicateVertex { state, action, first, second } => write!(
                f,
                "vertices {first} and {second} at ({state},{action}) coincide"
            ),
            NoLegalAction { state } => write!(f, "state {state} has no legal action"),
            DuplicateActionId { state, id } => write!(f, "state {state} lists action {id} twice"),
            ActionIdRange { state, id } => write!(f, "state {state} uses undeclared action {id}"),
        }
    }
}

pub(crate) fn duplicate_labels<'a>(labels: impl Iterator<Item = &'a String>) -> Vec<Violation> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            out.push(Violation::DuplicateLabel(l.clone()));
        }
    }
    out
}

/// Returns every invariant violation of `m`; an empty list means valid.
pub fn validate_rmdp(m: &Rmdp) -> Vec<Violation> {
    let n = m.n_states();
    let k = m.n_actions();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation::NoStates);
    }
    if k == 0 {
        out.push(Violation::NoActions);
    }
    out.extend(duplicate_labels(m.states.iter()));
    out.extend(duplicate_labels(m.actions.iter()));
    if m.initial.0 >= n {
        out.push(Violation::InitialOutOfRange(m.initial.0));
    }
    if m.rewards.len() != n {
        out.push(Violation::RewardShape { state: m.rewards.len().min(n) });
    }
    if m.polytopes.len() != n {
        out.push(Violation::PolytopeShape { state: m.polytopes.len().min(n) });
    }
    for (s, row) in m.rewards.iter().enumerate().take(n) {
        if row.len() != k {
            out.push(Violation::RewardShape { state: s });
            continue;
        }
        for (a, r) in row.iter().enumerate() {
            if !r.is_finite() {
                out.push(Violation::NonFiniteReward { state: s, action: a });
            }
        }
    }
    for (s, row) in m.polytopes.iter().enumerate().take(n) {
        if row.len() != k {
            out.push(Violation::PolytopeShape { state: s });
            continue;
        }
        for (a, poly) in row.iter().enumerate() {
            check_polytope(poly, s, a, n, &mut out);
        }
    }
    out
}

fn check_polytope(poly: &Polytope, s: usize, a: usize, n: usize, out: &mut Vec<Violation>) {
    if poly.is_empty() {
        out.push(Violation::EmptyPolytope { state: s, action: a });
        return;
    }
    let mut well_formed = vec![false; poly.len()];
    for (j, v) in poly.vertices.iter().enumerate() {
        if v.len() != n {
            out.push(Violation::Dimension { state: s, action: a, vertex: j, len: v.len(), expected: n });
            continue;
        }
        match v.simplex_problem() {
            Some(SimplexProblem::Entry { index, value }) => out.push(Violation::NegativeEntry {
                state: s,
                action: a,
                vertex: j,
                index,
                value,
            }),
            Some(SimplexProblem::Sum(sum)) => {
                out.push(Violation::Simplex { state: s, action: a, vertex: j, sum })
            }
            None => well_formed[j] = true,
        }
    }
    for j in 0..poly.len() {
        for i in 0..j {
            if well_formed[i] && well_formed[j] && poly.vertices[i].approx_eq(&poly.vertices[j]) {
                out.push(Violation::DuplicateVertex { state: s, action: a, first: i, second: j });
                break;
            }
        }
    }
}

/// Pure positional policy: `choice[i]` is the index of the chosen action in
/// the legal action list of the player's `i`-th state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PurePolicy {
    pub choice: Vec<usize>,
}

impl PurePolicy {
    pub fn new(choice: Vec<usize>) -> Self {
        PurePolicy { choice }
    }

    pub fn uniform(n: usize, action: usize) -> Self {
        PurePolicy { choice: vec![action; n] }
    }

    pub fn len(&self) -> usize {
        self.choice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.choice[i]
    }

    /// Checks totality and legality against the per-state action counts.
    pub fn check_legal(&self, action_counts: impl ExactSizeIterator<Item = usize>) -> Result<()> {
        if self.choice.len() != action_counts.len() {
            return Err(Error::IllegalPolicy(format!(
                "policy covers {} states, expected {}",
                self.choice.len(),
                action_counts.len()
            )));
        }
        for (s, (c, k)) in self.choice.iter().zip(action_counts).enumerate() {
            if *c >= k {
                return Err(Error::IllegalPolicy(format!(
                    "state {s} picks action {c} but has {k} legal actions"
                )));
            }
        }
        Ok(())
    }
}

/// Environment pure positional policy of an RMDP: a vertex index per
/// state-action pair, `select[s][a]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSelection {
    pub select: Vec<Vec<usize>>,
}

impl VertexSelection {
    pub fn first_vertices(m: &Rmdp) -> Self {
        VertexSelection { select: vec![vec![0; m.n_actions()]; m.n_states()] }
    }

    pub fn get(&self, s: usize, a: usize) -> usize {
        self.select[s][a]
    }
}

/// Average of a finite reward prefix, the finite-horizon surrogate of the
/// long-run average payoff.
pub fn trajectory_limavg(rewards: &[f64]) -> Result<f64> {
    if rewards.is_empty() {
        return Err(Error::Parse("empty reward sequence".into()));
    }
    Ok(rewards.iter().sum::<f64>() / rewards.len() as f64)
}
