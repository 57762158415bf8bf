//! Linear-time construction of the turn-based stochastic game induced by a
//! polytopic RMDP, and the policy correspondences between the two models.
//!
//! The agent becomes the Max player on copies of the RMDP states. Playing
//! action `a` at `s` moves deterministically to a Min state `(s,a)`, where the
//! environment picks one vertex of the uncertainty polytope as the next-state
//! distribution. One RMDP step is thus two game steps, so under the long-run
//! average objective Max rewards are doubled and Min rewards are zero. Under
//! the discounted objective rewards are not doubled and the game is tagged
//! [`DiscountMode::AlternateStep`]: the discount applies only on Min moves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Distribution, GameAction, PurePolicy, Rmdp, Tbsg, VertexSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountMode {
    EveryStep,
    AlternateStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    LimAvg,
    Discounted,
}

/// Index correspondence between an RMDP and its induced game.
///
/// Game state `s` is the Max copy of RMDP state `s`; Min state ordinal
/// `s * |A| + a` is the pair `(s,a)`. Min action ids enumerate the vertices of
/// all pairs in row-major order, so vertex `j` of `(s,a)` has id
/// `vertex_offset[(s,a)] + j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionMap {
    n_states: usize,
    n_actions: usize,
    vertex_offset: Vec<usize>,
    vertex_count: Vec<usize>,
}

impl ReductionMap {
    pub fn new(m: &Rmdp) -> Self {
        let mut vertex_offset = Vec::with_capacity(m.n_states() * m.n_actions());
        let mut vertex_count = Vec::with_capacity(vertex_offset.capacity());
        let mut next = 0;
        for row in &m.polytopes {
            for p in row {
                vertex_offset.push(next);
                vertex_count.push(p.len());
                next += p.len();
            }
        }
        ReductionMap { n_states: m.n_states(), n_actions: m.n_actions(), vertex_offset, vertex_count }
    }

    pub fn n_max_states(&self) -> usize {
        self.n_states
    }

    pub fn n_min_states(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn n_min_actions(&self) -> usize {
        self.vertex_count.iter().sum()
    }

    /// Max state (union index) copying RMDP state `s`.
    pub fn max_state_of(&self, s: usize) -> usize {
        s
    }

    /// Min state ordinal of the pair `(s,a)`; its union index is
    /// `n_max_states() + ordinal`.
    pub fn min_state_of(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn min_union_index(&self, s: usize, a: usize) -> usize {
        self.n_states + self.min_state_of(s, a)
    }

    pub fn vertex_action_of(&self, s: usize, a: usize, j: usize) -> usize {
        let k = self.min_state_of(s, a);
        debug_assert!(j < self.vertex_count[k]);
        self.vertex_offset[k] + j
    }

    pub fn state_of_max(&self, u: usize) -> Option<usize> {
        (u < self.n_states).then_some(u)
    }

    pub fn pair_of_min(&self, ordinal: usize) -> Option<(usize, usize)> {
        (ordinal < self.n_min_states()).then(|| (ordinal / self.n_actions, ordinal % self.n_actions))
    }

    pub fn vertex_of_min_action(&self, id: usize) -> Option<(usize, usize, usize)> {
        if id >= self.n_min_actions() {
            return None;
        }
        // offsets are non-decreasing; the owning pair is the last one starting at or before id
        let k = self.vertex_offset.partition_point(|&o| o <= id) - 1;
        let (s, a) = self.pair_of_min(k)?;
        Some((s, a, id - self.vertex_offset[k]))
    }

    /// Checks that every forward map is injective and hits its whole codomain,
    /// and that the inverse maps undo them.
    pub fn is_bijective(&self) -> bool {
        let mut seen_min = vec![false; self.n_min_states()];
        let mut seen_act = vec![false; self.n_min_actions()];
        for s in 0..self.n_states {
            if self.state_of_max(self.max_state_of(s)) != Some(s) {
                return false;
            }
            for a in 0..self.n_actions {
                let k = self.min_state_of(s, a);
                if k >= seen_min.len() || std::mem::replace(&mut seen_min[k], true) {
                    return false;
                }
                if self.pair_of_min(k) != Some((s, a)) {
                    return false;
                }
                for j in 0..self.vertex_count[k] {
                    let id = self.vertex_action_of(s, a, j);
                    if id >= seen_act.len() || std::mem::replace(&mut seen_act[id], true) {
                        return false;
                    }
                    if self.vertex_of_min_action(id) != Some((s, a, j)) {
                        return false;
                    }
                }
            }
        }
        seen_min.iter().all(|&b| b) && seen_act.iter().all(|&b| b)
    }
}

/// Closed-form size of the induced game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionSize {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_transition_entries: usize,
}

pub fn reduction_size(m: &Rmdp) -> ReductionSize {
    let pairs = m.n_states() * m.n_actions();
    let vertices = m.total_vertices();
    ReductionSize {
        n_states: m.n_states() + pairs,
        n_actions: m.n_actions() + vertices,
        n_transition_entries: pairs + vertices * m.n_states(),
    }
}

/// Size actually present in a game. Max moves count one entry each (Dirac);
/// Min moves count their full row over the Max states they target.
pub fn counted_size(g: &Tbsg, map: &ReductionMap) -> ReductionSize {
    let max_entries = g.actions[..g.n_max()].iter().map(Vec::len).sum::<usize>();
    let min_entries = g.actions[g.n_max()..]
        .iter()
        .flatten()
        .map(|act| act.next.0[..map.n_max_states()].len())
        .sum::<usize>();
    let distinct_max_ids: std::collections::BTreeSet<usize> =
        g.actions[..g.n_max()].iter().flatten().map(|a| a.id).collect();
    let distinct_min_ids: std::collections::BTreeSet<usize> =
        g.actions[g.n_max()..].iter().flatten().map(|a| a.id).collect();
    ReductionSize {
        n_states: g.n_states(),
        n_actions: distinct_max_ids.len() + distinct_min_ids.len(),
        n_transition_entries: max_entries + min_entries,
    }
}

/// Builds the induced game `G_M` and its index map.
pub fn reduce(m: &Rmdp, objective: Objective) -> Result<(Tbsg, ReductionMap)> {
    m.ensure_valid()?;
    let map = ReductionMap::new(m);
    let n = m.n_states();
    let k = m.n_actions();
    let total = n + n * k;
    let scale = match objective {
        Objective::LimAvg => 2.0,
        Objective::Discounted => 1.0,
    };

    let mut actions = Vec::with_capacity(total);
    for s in 0..n {
        actions.push(
            (0..k)
                .map(|a| GameAction {
                    id: a,
                    reward: scale * m.reward(s, a),
                    next: Distribution::dirac(total, map.min_union_index(s, a)),
                })
                .collect(),
        );
    }
    for s in 0..n {
        for a in 0..k {
            actions.push(
                m.polytope(s, a)
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let mut next = v.0.clone();
                        next.resize(total, 0.0);
                        GameAction { id: map.vertex_action_of(s, a, j), reward: 0.0, next: Distribution(next) }
                    })
                    .collect(),
            );
        }
    }

    let min_states = (0..n)
        .flat_map(|s| (0..k).map(move |a| (s, a)))
        .map(|(s, a)| format!("({},{})", m.states[s], m.actions[a]))
        .collect();
    let g = Tbsg {
        max_states: m.states.clone(),
        min_states,
        n_max_actions: k,
        n_min_actions: map.n_min_actions(),
        actions,
        initial: map.max_state_of(m.initial.0),
        discount_mode: match objective {
            Objective::LimAvg => DiscountMode::EveryStep,
            Objective::Discounted => DiscountMode::AlternateStep,
        },
    };
    Ok((g, map))
}

/// Agent policy of the RMDP as a Max policy of the induced game.
pub fn lift_agent_policy(sigma: &PurePolicy, map: &ReductionMap) -> PurePolicy {
    let mut out = vec![0; map.n_max_states()];
    for (s, &a) in sigma.choice.iter().enumerate() {
        out[map.max_state_of(s)] = a;
    }
    PurePolicy::new(out)
}

pub fn lower_agent_policy(max_policy: &PurePolicy, map: &ReductionMap) -> PurePolicy {
    let mut out = vec![0; map.n_max_states()];
    for (u, &a) in max_policy.choice.iter().enumerate() {
        if let Some(s) = map.state_of_max(u) {
            out[s] = a;
        }
    }
    PurePolicy::new(out)
}

/// Vertex selection of the environment as a Min policy indexed by Min
/// state ordinal.
pub fn lift_env_policy(pi: &VertexSelection, map: &ReductionMap) -> PurePolicy {
    let mut out = vec![0; map.n_min_states()];
    for (s, row) in pi.select.iter().enumerate() {
        for (a, &j) in row.iter().enumerate() {
            out[map.min_state_of(s, a)] = j;
        }
    }
    PurePolicy::new(out)
}

pub fn lower_env_policy(min_policy: &PurePolicy, map: &ReductionMap) -> Result<VertexSelection> {
    if min_policy.len() != map.n_min_states() {
        return Err(Error::IllegalPolicy(format!(
            "Min policy covers {} states, game has {}",
            min_policy.len(),
            map.n_min_states()
        )));
    }
    let mut select = vec![vec![0; map.n_actions]; map.n_states];
    for (k, &j) in min_policy.choice.iter().enumerate() {
        let (s, a) = map.pair_of_min(k).expect("ordinal in range");
        select[s][a] = j;
    }
    Ok(VertexSelection { select })
}
