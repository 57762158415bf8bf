//! Turn-based game solving: discounted strategy iteration, policy profile
//! evaluation (PPE) and robust polytopic policy iteration (RPPI).
//!
//! RPPI solves the discounted game induced by an RMDP for discount factors
//! 1/2, 3/4, 7/8, ... and stops at the first rung whose equilibrium pair is
//! also a pair of mutual best responses under the long-run average
//! objective. Blackwell optimality of turn-based games guarantees such a rung
//! exists; PPE certifies it by solving the two average-reward MDPs obtained by
//! fixing either player's policy and comparing their gains.

use std::time::Instant;

use crate::deadline::Deadline;
use crate::error::{Error, Result};
use crate::mdp::{
    evaluate_chain, evaluate_policy_lra, improvement_round, solve_discounted_mdp_with,
    solve_lra_mdp_from, GainBias, Mdp, MdpAction, Optimize,
};
use crate::model::{Player, PurePolicy, Rmdp, Tbsg};
use crate::reduction::{lift_agent_policy, lower_agent_policy, reduce, DiscountMode, Objective};
use crate::report::{millis, Algorithm, SolveReport};

/// Default tolerance on `|max_gain - min_gain|` for PPE.
pub const PPE_TOL: f64 = 1e-5;
/// Default cap on discount-ladder rungs.
pub const MAX_OUTER: usize = 64;
/// Cap on Min improvement rounds in discounted strategy iteration.
pub const MAX_STRATEGY_ROUNDS: usize = 10_000;
pub const LRA_TOL: f64 = 1e-9;

/// Pure positional policies of both players, each indexed by the player's
/// own state ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyPair {
    pub max_policy: PurePolicy,
    pub min_policy: PurePolicy,
}

impl PolicyPair {
    pub fn first_actions(g: &Tbsg) -> Self {
        PolicyPair {
            max_policy: PurePolicy::uniform(g.n_max(), 0),
            min_policy: PurePolicy::uniform(g.n_min(), 0),
        }
    }

    pub fn check_legal(&self, g: &Tbsg) -> Result<()> {
        self.max_policy.check_legal(g.action_counts(Player::Max).into_iter())?;
        self.min_policy.check_legal(g.action_counts(Player::Min).into_iter())
    }

    /// Both policies as one choice vector over the union state space.
    pub fn union_choice(&self) -> PurePolicy {
        let mut c = self.max_policy.choice.clone();
        c.extend_from_slice(&self.min_policy.choice);
        PurePolicy::new(c)
    }
}

/// The MDP left for the other player after fixing `player`'s policy. States
/// are the game's union states; fixed states keep only their chosen action.
pub fn fix_player(g: &Tbsg, player: Player, policy: &PurePolicy) -> Mdp {
    let optimize = match player {
        Player::Max => Optimize::Min,
        Player::Min => Optimize::Max,
    };
    let actions = g
        .actions
        .iter()
        .enumerate()
        .map(|(u, acts)| {
            let to_mdp = |a: &crate::model::GameAction| MdpAction::new(a.reward, a.next.support().collect());
            if g.owner(u) == player {
                let ordinal = if player == Player::Max { u } else { u - g.n_max() };
                vec![to_mdp(&acts[policy.choice[ordinal]])]
            } else {
                acts.iter().map(to_mdp).collect()
            }
        })
        .collect();
    Mdp { actions, optimize }
}

/// Union-space policy for the MDP returned by [`fix_player`]: the free
/// player's choices, zeros at fixed states.
fn free_choice(g: &Tbsg, free: Player, policy: &PurePolicy) -> PurePolicy {
    let mut c = vec![0; g.n_states()];
    for (i, &a) in policy.choice.iter().enumerate() {
        c[g.union_index(free, i)] = a;
    }
    PurePolicy::new(c)
}

fn restrict(g: &Tbsg, player: Player, union: &PurePolicy) -> PurePolicy {
    match player {
        Player::Max => PurePolicy::new(union.choice[..g.n_max()].to_vec()),
        Player::Min => PurePolicy::new(union.choice[g.n_max()..].to_vec()),
    }
}

/// Per-state discount factor: `gamma` everywhere, or only at Min states in
/// alternate-step mode.
pub fn discount_vector(g: &Tbsg, gamma: f64, mode: DiscountMode) -> Vec<f64> {
    (0..g.n_states())
        .map(|u| match (mode, g.owner(u)) {
            (DiscountMode::AlternateStep, Player::Max) => 1.0,
            _ => gamma,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedGameSolution {
    pub pair: PolicyPair,
    /// Discounted values over the union state space.
    pub values: Vec<f64>,
    /// Min improvement rounds performed.
    pub rounds: usize,
}

/// Hoffman-Karp strategy iteration for the discounted game.
///
/// Each round fixes Min's policy, computes Max's optimal discounted response
/// by policy iteration, then switches every Min state that has an action
/// lowering its value by more than `tol`. Stops when no Min state switches.
pub fn strategy_iteration_discounted(
    g: &Tbsg,
    gamma: f64,
    mode: DiscountMode,
    tol: f64,
    warm: Option<&PolicyPair>,
) -> Result<DiscountedGameSolution> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Discount(gamma));
    }
    g.ensure_valid()?;
    if mode == DiscountMode::AlternateStep {
        let alternating = g.actions[..g.n_max()]
            .iter()
            .flatten()
            .all(|a| a.next.support().all(|(t, _)| g.owner(t) == Player::Min));
        if !alternating {
            return Err(Error::Parse(
                "alternate-step discounting needs every Max move to enter a Min state".into(),
            ));
        }
    }
    let discounts = discount_vector(g, gamma, mode);
    let mut pair = match warm {
        Some(p) => {
            p.check_legal(g)?;
            p.clone()
        }
        None => PolicyPair::first_actions(g),
    };

    for rounds in 1..=MAX_STRATEGY_ROUNDS {
        let mdp = fix_player(g, Player::Min, &pair.min_policy);
        let init = free_choice(g, Player::Max, &pair.max_policy);
        let response = solve_discounted_mdp_with(&mdp, &discounts, Some(&init), tol)?;
        pair.max_policy = restrict(g, Player::Max, &response.policy);
        let values = response.values;

        let thr = tol + crate::mdp::discounted_noise_floor(&values);
        let mut changed = false;
        for i in 0..g.n_min() {
            let u = g.union_index(Player::Min, i);
            let q: Vec<f64> = g.actions[u]
                .iter()
                .map(|a| a.reward + discounts[u] * a.next.dot(&values))
                .collect();
            let current = q[pair.min_policy.choice[i]];
            let low = q.iter().copied().fold(f64::INFINITY, f64::min);
            if low < current - thr {
                pair.min_policy.choice[i] = q.iter().position(|&x| x <= low + thr).unwrap_or(0);
                changed = true;
            }
        }
        if !changed {
            return Ok(DiscountedGameSolution { pair, values, rounds });
        }
    }
    Err(Error::IterationLimit { what: "discounted strategy iteration", limit: MAX_STRATEGY_ROUNDS, best: None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpeResult {
    pub is_optimal: bool,
    /// Long-run average gains of Max's best response to the Min policy, over
    /// the union state space.
    pub values: Vec<f64>,
    /// Gains of Min's best response to the Max policy.
    pub min_response_values: Vec<f64>,
    /// Largest componentwise gap between the two gain vectors.
    pub gap: f64,
}

/// Policy profile evaluation: are the two policies long-run average best
/// responses to each other? Gains are compared at every state.
pub fn ppe(g: &Tbsg, pair: &PolicyPair, ppe_tol: f64) -> Result<PpeResult> {
    pair.check_legal(g)?;
    let fix_min = fix_player(g, Player::Min, &pair.min_policy);
    let max_resp = solve_lra_mdp_from(&fix_min, &free_choice(g, Player::Max, &pair.max_policy), LRA_TOL)?;
    let fix_max = fix_player(g, Player::Max, &pair.max_policy);
    let min_resp = solve_lra_mdp_from(&fix_max, &free_choice(g, Player::Min, &pair.min_policy), LRA_TOL)?;
    let values = max_resp.gain_bias.gain;
    let min_values = min_resp.gain_bias.gain;
    let gap = values
        .iter()
        .zip(&min_values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(PpeResult { is_optimal: gap < ppe_tol, values, min_response_values: min_values, gap })
}

/// Long-run average gain and bias of the chain a policy pair induces.
pub fn pair_gain(g: &Tbsg, pair: &PolicyPair) -> Result<GainBias> {
    pair.check_legal(g)?;
    let union = pair.union_choice();
    let rows: Vec<Vec<(usize, f64)>> = g
        .actions
        .iter()
        .zip(&union.choice)
        .map(|(acts, &c)| acts[c].next.support().collect())
        .collect();
    let rewards: Vec<f64> = g.actions.iter().zip(&union.choice).map(|(acts, &c)| acts[c].reward).collect();
    let rows: Vec<&[(usize, f64)]> = rows.iter().map(Vec::as_slice).collect();
    evaluate_chain(&rows, &rewards)
}

/// Largest gain increase either player obtains from one round of average
/// reward policy improvement against the other's fixed policy. At a pair of
/// mutual best responses this is zero up to float noise.
pub fn best_response_improvement(g: &Tbsg, pair: &PolicyPair) -> Result<f64> {
    let mut worst = 0.0f64;
    for (player, own) in [(Player::Max, &pair.max_policy), (Player::Min, &pair.min_policy)] {
        let other = match player {
            Player::Max => (Player::Min, &pair.min_policy),
            Player::Min => (Player::Max, &pair.max_policy),
        };
        let mdp = fix_player(g, other.0, other.1);
        let start = free_choice(g, player, own);
        let before = evaluate_policy_lra(&mdp, &start)?;
        if let Some(next) = improvement_round(&mdp, &start, &before, LRA_TOL) {
            let after = evaluate_policy_lra(&mdp, &next)?;
            let sign = mdp.optimize.sign();
            for (a, b) in after.gain.iter().zip(&before.gain) {
                worst = worst.max(sign * (a - b));
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RppiOptions {
    pub ppe_tol: f64,
    pub max_outer: usize,
    pub deadline: Deadline,
}

impl Default for RppiOptions {
    fn default() -> Self {
        RppiOptions { ppe_tol: PPE_TOL, max_outer: MAX_OUTER, deadline: Deadline::none() }
    }
}

/// RPPI result with the trace needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct RppiOutcome {
    pub report: SolveReport,
    /// Discount factor of every rung tried, in order.
    pub gammas: Vec<f64>,
    /// PPE gap observed at every rung.
    pub gaps: Vec<f64>,
    pub pair: PolicyPair,
    pub game: Tbsg,
}

/// Discount factor of rung `k`: `1 - 2^-(k+1)`.
pub fn ladder_gamma(k: usize) -> f64 {
    let mut gamma = 0.5;
    for _ in 0..k {
        gamma = (1.0 + gamma) / 2.0;
    }
    gamma
}

/// Inner strategy-iteration tolerance at discount `gamma`.
pub fn inner_tolerance(gamma: f64) -> f64 {
    1e-9f64.min((1.0 - gamma) * 1e-6)
}

pub fn rppi(m: &Rmdp, ppe_tol: f64, max_outer: usize) -> Result<SolveReport> {
    rppi_with(m, &RppiOptions { ppe_tol, max_outer, deadline: Deadline::none() }).map(|o| o.report)
}

pub fn rppi_with(m: &Rmdp, opts: &RppiOptions) -> Result<RppiOutcome> {
    let start = Instant::now();
    let (g, map) = reduce(m, Objective::LimAvg)?;
    let mut gamma = 0.5;
    let mut gammas = Vec::new();
    let mut gaps = Vec::new();
    let mut warm: Option<PolicyPair> = None;
    let mut inner = 0;

    for _ in 0..opts.max_outer {
        opts.deadline.check()?;
        if gamma >= 1.0 {
            // the ladder has run out of representable discount factors
            break;
        }
        gammas.push(gamma);
        let sol = strategy_iteration_discounted(&g, gamma, DiscountMode::EveryStep, inner_tolerance(gamma), warm.as_ref())?;
        inner += sol.rounds;
        opts.deadline.check()?;
        let check = ppe(&g, &sol.pair, opts.ppe_tol)?;
        gaps.push(check.gap);
        if check.is_optimal {
            let values = check.values[..map.n_max_states()].to_vec();
            let report = SolveReport {
                value_at_initial: values[m.initial.0],
                values: Some(values),
                agent_policy: lower_agent_policy(&sol.pair.max_policy, &map),
                env_policy: Some(sol.pair.min_policy.clone()),
                algorithm: Algorithm::Rppi,
                outer_iterations: gammas.len(),
                inner_iterations: inner,
                final_gamma: Some(gamma),
                wall_clock_seconds: millis(start.elapsed()),
            };
            return Ok(RppiOutcome { report, gammas, gaps, pair: sol.pair, game: g });
        }
        warm = Some(sol.pair);
        gamma = (1.0 + gamma) / 2.0;
    }
    Err(Error::RppiExhausted {
        outer: gammas.len(),
        last_gamma: gammas.last().copied().unwrap_or(gamma),
        last_gap: gaps.last().copied().unwrap_or(f64::INFINITY),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub holds: bool,
    pub inf_value: f64,
}

/// Checks whether the agent policy guarantees long-run average value at
/// least `threshold` (up to [`PPE_TOL`]) against every environment.
pub fn verify_agent_policy(m: &Rmdp, sigma: &PurePolicy, threshold: f64) -> Result<Verification> {
    m.ensure_valid()?;
    sigma.check_legal(std::iter::repeat_n(m.n_actions(), m.n_states()))?;
    let (g, map) = reduce(m, Objective::LimAvg)?;
    let mdp = fix_player(&g, Player::Max, &lift_agent_policy(sigma, &map));
    let sol = solve_lra_mdp_from(&mdp, &PurePolicy::uniform(g.n_states(), 0), LRA_TOL)?;
    let inf_value = sol.gain_bias.gain[map.max_state_of(m.initial.0)];
    Ok(Verification { holds: inf_value >= threshold - PPE_TOL, inf_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{chooser, m1, m2};
    use crate::reduction::reduce;

    #[test]
    fn ladder_is_exact() {
        for k in 0..40 {
            assert_eq!(ladder_gamma(k), 1.0 - 0.5f64.powi(k as i32 + 1));
        }
    }

    #[test]
    fn m1_every_step_discounted() {
        let (g, _) = reduce(&m1(), Objective::LimAvg).unwrap();
        let sol = strategy_iteration_discounted(&g, 0.5, DiscountMode::EveryStep, 1e-12, None).unwrap();
        assert!((sol.values[0] - 40.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn m1_alternate_step_matches_rmdp_discounting() {
        let (g, _) = reduce(&m1(), Objective::Discounted).unwrap();
        let sol = strategy_iteration_discounted(&g, 0.5, DiscountMode::AlternateStep, 1e-12, None).unwrap();
        assert!((sol.values[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn m2_discounted_min_choice() {
        let (g, _) = reduce(&m2(), Objective::LimAvg).unwrap();
        let sol = strategy_iteration_discounted(&g, 0.99, DiscountMode::EveryStep, 1e-12, None).unwrap();
        // vertex 1 = (0.5,0.5) at (s0,a); vertex 0 = (0.3,0.7) at (s1,a)
        assert_eq!(sol.pair.min_policy.choice, vec![1, 0]);
    }

    #[test]
    fn ppe_on_m2() {
        let (g, _) = reduce(&m2(), Objective::LimAvg).unwrap();
        let good = PolicyPair { max_policy: PurePolicy::new(vec![0, 0]), min_policy: PurePolicy::new(vec![1, 0]) };
        let r = ppe(&g, &good, PPE_TOL).unwrap();
        assert!(r.is_optimal);
        assert!((r.values[0] - 0.375).abs() < 1e-12);

        let bad = PolicyPair { max_policy: PurePolicy::new(vec![0, 0]), min_policy: PurePolicy::new(vec![0, 0]) };
        let r = ppe(&g, &bad, PPE_TOL).unwrap();
        assert!(!r.is_optimal);
        assert!((r.values[0] - 0.75).abs() < 1e-12);
        assert!((r.min_response_values[0] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn ppe_trivial_game() {
        let (g, _) = reduce(&m1(), Objective::LimAvg).unwrap();
        let r = ppe(&g, &PolicyPair::first_actions(&g), PPE_TOL).unwrap();
        assert!(r.is_optimal);
        assert_eq!(r.values[0], 5.0);
    }

    #[test]
    fn rppi_reference_models() {
        let r = rppi(&m1(), PPE_TOL, MAX_OUTER).unwrap();
        assert_eq!(r.value_at_initial, 5.0);
        assert_eq!(r.agent_policy.choice, vec![0]);
        assert_eq!(r.outer_iterations, 1);

        let r = rppi(&m2(), PPE_TOL, MAX_OUTER).unwrap();
        assert!((r.value_at_initial - 0.375).abs() < 1e-12);
        assert!(r.is_consistent(0, 2));

        let r = rppi(&chooser(), PPE_TOL, MAX_OUTER).unwrap();
        assert!((r.value_at_initial - 3.0).abs() < 1e-12);
        assert_eq!(r.agent_policy.choice[0], 1);
    }

    #[test]
    fn verification_thresholds() {
        let sigma = PurePolicy::new(vec![0, 0]);
        let v = verify_agent_policy(&m2(), &sigma, 0.3).unwrap();
        assert!(v.holds);
        assert!((v.inf_value - 0.375).abs() < 1e-12);
        assert!(!verify_agent_policy(&m2(), &sigma, 0.4).unwrap().holds);
        let v = verify_agent_policy(&m1(), &PurePolicy::new(vec![0]), 5.0).unwrap();
        assert!(v.holds && v.inf_value == 5.0);
        assert!(verify_agent_policy(&m2(), &PurePolicy::new(vec![0]), 0.0).is_err());
    }

    #[test]
    fn exhausted_ladder_reports_gap() {
        let err = rppi(&m2(), -1.0, 3).unwrap_err();
        match err {
            Error::RppiExhausted { outer, last_gamma, .. } => {
                assert_eq!(outer, 3);
                assert_eq!(last_gamma, 0.875);
            }
            e => panic!("unexpected {e}"),
        }
    }
}
