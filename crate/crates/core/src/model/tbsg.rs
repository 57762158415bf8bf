use serde::{Deserialize, Serialize};

use super::{duplicate_labels, Distribution, SimplexProblem, Violation};
use crate::error::{Error, Result};
use crate::reduction::DiscountMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Max,
    Min,
}

/// A legal action at some game state. `id` is the action's identifier in the
/// owning player's action set; `next` ranges over the union state space.
#[derive(Debug, Clone, PartialEq)]
pub struct GameAction {
    pub id: usize,
    pub reward: f64,
    pub next: Distribution,
}

/// Turn-based stochastic game.
///
/// States are numbered over the disjoint union: Max states occupy
/// `0..n_max()` and Min states `n_max()..n_states()`. `actions[u]` lists the
/// legal actions of union state `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tbsg {
    pub max_states: Vec<String>,
    pub min_states: Vec<String>,
    pub n_max_actions: usize,
    pub n_min_actions: usize,
    pub actions: Vec<Vec<GameAction>>,
    pub initial: usize,
    pub discount_mode: DiscountMode,
}

impl Tbsg {
    pub fn n_max(&self) -> usize {
        self.max_states.len()
    }

    pub fn n_min(&self) -> usize {
        self.min_states.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_max() + self.n_min()
    }

    pub fn owner(&self, u: usize) -> Player {
        if u < self.n_max() {
            Player::Max
        } else {
            Player::Min
        }
    }

    /// Union index of the `i`-th state of `player`.
    pub fn union_index(&self, player: Player, i: usize) -> usize {
        match player {
            Player::Max => i,
            Player::Min => self.n_max() + i,
        }
    }

    pub fn label(&self, u: usize) -> &str {
        if u < self.n_max() {
            &self.max_states[u]
        } else {
            &self.min_states[u - self.n_max()]
        }
    }

    /// Number of legal actions at each state of `player`, in order.
    pub fn action_counts(&self, player: Player) -> Vec<usize> {
        let range = match player {
            Player::Max => 0..self.n_max(),
            Player::Min => self.n_max()..self.n_states(),
        };
        self.actions[range].iter().map(Vec::len).collect()
    }

    /// Total number of nonzero transition entries.
    pub fn transition_entries(&self) -> usize {
        self.actions
            .iter()
            .flatten()
            .map(|a| a.next.support().count())
            .sum()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate_tbsg(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&super::TbsgFile::from(self)).expect("game serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: super::TbsgFile = serde_json::from_str(text)?;
        let g = file.into_game()?;
        g.ensure_valid()?;
        Ok(g)
    }
}

/// Returns every invariant violation of `g`; an empty list means valid.
pub fn validate_tbsg(g: &Tbsg) -> Vec<Violation> {
    let n = g.n_states();
    let mut out = Vec::new();
    if g.n_max() == 0 {
        out.push(Violation::NoStates);
    }
    out.extend(duplicate_labels(g.max_states.iter().chain(g.min_states.iter())));
    if g.initial >= g.n_max() {
        out.push(if g.initial < n {
            Violation::InitialNotMax(g.initial)
        } else {
            Violation::InitialOutOfRange(g.initial)
        });
    }
    if g.actions.len() != n {
        out.push(Violation::PolytopeShape { state: g.actions.len().min(n) });
    }
    for (u, acts) in g.actions.iter().enumerate().take(n) {
        if acts.is_empty() {
            out.push(Violation::NoLegalAction { state: u });
        }
        let id_bound = match g.owner(u) {
            Player::Max => g.n_max_actions,
            Player::Min => g.n_min_actions,
        };
        let mut ids = std::collections::HashSet::new();
        for (j, act) in acts.iter().enumerate() {
            if act.id >= id_bound {
                out.push(Violation::ActionIdRange { state: u, id: act.id });
            }
            if !ids.insert(act.id) {
                out.push(Violation::DuplicateActionId { state: u, id: act.id });
            }
            if !act.reward.is_finite() {
                out.push(Violation::NonFiniteReward { state: u, action: j });
            }
            if act.next.len() != n {
                out.push(Violation::Dimension {
                    state: u,
                    action: j,
                    vertex: 0,
                    len: act.next.len(),
                    expected: n,
                });
                continue;
            }
            match act.next.simplex_problem() {
                Some(SimplexProblem::Entry { index, value }) => out.push(Violation::NegativeEntry {
                    state: u,
                    action: j,
                    vertex: 0,
                    index,
                    value,
                }),
                Some(SimplexProblem::Sum(sum)) => {
                    out.push(Violation::Simplex { state: u, action: j, vertex: 0, sum })
                }
                None => {}
            }
        }
    }
    out
}
