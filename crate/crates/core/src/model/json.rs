//! Canonical JSON layouts. Rows are ordered by state, then action.

use serde::{Deserialize, Serialize};

use super::{Distribution, GameAction, Polytope, Rmdp, StateId, Tbsg};
use crate::error::{Error, Result};
use crate::reduction::DiscountMode;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmdpFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub initial: String,
    pub rewards: Vec<Vec<f64>>,
    pub polytopes: Vec<Vec<Vec<Vec<f64>>>>,
}

impl From<&Rmdp> for RmdpFile {
    fn from(m: &Rmdp) -> Self {
        RmdpFile {
            states: m.states.clone(),
            actions: m.actions.clone(),
            initial: m.states.get(m.initial.0).cloned().unwrap_or_default(),
            rewards: m.rewards.clone(),
            polytopes: m
                .polytopes
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|p| p.vertices.iter().map(|v| v.0.clone()).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

impl RmdpFile {
    pub fn into_model(self) -> Result<Rmdp> {
        let initial = self
            .states
            .iter()
            .position(|s| *s == self.initial)
            .ok_or_else(|| Error::Parse(format!("initial state {:?} is not listed", self.initial)))?;
        Ok(Rmdp {
            states: self.states,
            actions: self.actions,
            initial: StateId(initial),
            rewards: self.rewards,
            polytopes: self
                .polytopes
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|vs| Polytope::new(vs.into_iter().map(Distribution).collect()))
                        .collect()
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbsgFile {
    pub max_states: Vec<String>,
    pub min_states: Vec<String>,
    pub initial: String,
    pub discount_mode: DiscountMode,
    pub n_max_actions: usize,
    pub n_min_actions: usize,
    /// Legal action ids per union state.
    pub actions: Vec<Vec<usize>>,
    pub rewards: Vec<Vec<f64>>,
    pub transitions: Vec<Vec<Vec<f64>>>,
}

impl From<&Tbsg> for TbsgFile {
    fn from(g: &Tbsg) -> Self {
        TbsgFile {
            max_states: g.max_states.clone(),
            min_states: g.min_states.clone(),
            initial: g.label(g.initial.min(g.n_states().saturating_sub(1))).to_string(),
            discount_mode: g.discount_mode,
            n_max_actions: g.n_max_actions,
            n_min_actions: g.n_min_actions,
            actions: g.actions.iter().map(|a| a.iter().map(|x| x.id).collect()).collect(),
            rewards: g.actions.iter().map(|a| a.iter().map(|x| x.reward).collect()).collect(),
            transitions: g
                .actions
                .iter()
                .map(|a| a.iter().map(|x| x.next.0.clone()).collect())
                .collect(),
        }
    }
}

impl TbsgFile {
    pub fn into_game(self) -> Result<Tbsg> {
        let n = self.max_states.len() + self.min_states.len();
        if self.actions.len() != n || self.rewards.len() != n || self.transitions.len() != n {
            return Err(Error::Parse("per-state tables must cover every state".into()));
        }
        let initial = self
            .max_states
            .iter()
            .chain(self.min_states.iter())
            .position(|s| *s == self.initial)
            .ok_or_else(|| Error::Parse(format!("initial state {:?} is not listed", self.initial)))?;
        let mut actions = Vec::with_capacity(n);
        for ((ids, rs), ts) in self.actions.into_iter().zip(self.rewards).zip(self.transitions) {
            if ids.len() != rs.len() || ids.len() != ts.len() {
                return Err(Error::Parse("action, reward and transition rows disagree".into()));
            }
            actions.push(
                ids.into_iter()
                    .zip(rs)
                    .zip(ts)
                    .map(|((id, reward), next)| GameAction { id, reward, next: Distribution(next) })
                    .collect(),
            );
        }
        Ok(Tbsg {
            max_states: self.max_states,
            min_states: self.min_states,
            n_max_actions: self.n_max_actions,
            n_min_actions: self.n_min_actions,
            actions,
            initial,
            discount_mode: self.discount_mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const M1: &str = r#"{"states":["s0"],"actions":["a"],"initial":"s0",
        "rewards":[[5.0]],"polytopes":[[[[1.0]]]]}"#;

    #[test]
    fn parses_minimal_model() {
        let m = Rmdp::from_json(M1).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.reward(0, 0), 5.0);
        assert_eq!(Rmdp::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn rejects_unknown_initial_and_bad_json() {
        let bad = M1.replace(r#""initial":"s0""#, r#""initial":"zz""#);
        assert!(matches!(Rmdp::from_json(&bad), Err(Error::Parse(_))));
        assert!(matches!(Rmdp::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_far_from_simplex_and_renormalizes_noise() {
        let far = M1.replace("[[[[1.0]]]]", "[[[[1.1]]]]");
        assert!(matches!(Rmdp::from_json(&far), Err(Error::Invalid(_))));
        let near = M1.replace("[[[[1.0]]]]", "[[[[1.0000000001]]]]");
        let m = Rmdp::from_json(&near).unwrap();
        assert_eq!(m.polytope(0, 0).vertices[0].0, vec![1.0]);
    }
}
