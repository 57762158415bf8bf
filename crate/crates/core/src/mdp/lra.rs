//! Multichain Howard policy iteration for the long-run average criterion.
//!
//! Improvement is two-staged: first any state whose gain can be raised by
//! `P g` switches; only when no such state exists, states switch among their
//! gain-tied actions on `r + P h`. Switching requires a strict improvement
//! beyond `tol`, so a round that would only re-label ties keeps the old
//! policy.

use super::chain::evaluate_chain;
use super::{best_lowest_index, Mdp, PurePolicy, MAX_IMPROVEMENT_ROUNDS};
use crate::error::{Error, LraBestSoFar, Result};

pub use super::chain::GainBias;

#[derive(Debug, Clone, PartialEq)]
pub struct LraSolution {
    pub gain_bias: GainBias,
    pub policy: PurePolicy,
    pub iterations: usize,
}

pub fn evaluate_policy_lra(m: &Mdp, policy: &PurePolicy) -> Result<GainBias> {
    m.check_policy(policy)?;
    let (rows, rewards) = m.fix(policy);
    evaluate_chain(&rows, &rewards)
}

/// One improvement round from `policy` with evaluation `eval`. Returns the
/// switched policy, or `None` when no state improves beyond `tol`.
pub fn improvement_round(m: &Mdp, policy: &PurePolicy, eval: &GainBias, tol: f64) -> Option<PurePolicy> {
    let sign = m.optimize.sign();
    let GainBias { gain, bias } = eval;
    let mut next = policy.clone();
    let mut changed = false;

    for (s, acts) in m.actions.iter().enumerate() {
        let (best, top) = best_lowest_index(acts.iter().map(|a| a.expect(gain)), sign, tol);
        if top > sign * gain[s] + tol {
            next.choice[s] = best;
            changed = true;
        }
    }
    if changed {
        return Some(next);
    }

    for (s, acts) in m.actions.iter().enumerate() {
        let tied: Vec<usize> = (0..acts.len())
            .filter(|&a| sign * acts[a].expect(gain) >= sign * gain[s] - tol)
            .collect();
        let score = |a: usize| acts[a].reward + acts[a].expect(bias);
        let (k, top) = best_lowest_index(tied.iter().map(|&a| score(a)), sign, tol);
        if top > sign * (gain[s] + bias[s]) + tol {
            next.choice[s] = tied[k];
            changed = true;
        }
    }
    changed.then_some(next)
}

pub fn solve_lra_mdp(m: &Mdp, tol: f64) -> Result<LraSolution> {
    solve_lra_mdp_from(m, &PurePolicy::uniform(m.n_states(), 0), tol)
}

/// Policy iteration warm-started from `init`.
pub fn solve_lra_mdp_from(m: &Mdp, init: &PurePolicy, tol: f64) -> Result<LraSolution> {
    m.validate()?;
    m.check_policy(init)?;
    let mut policy = init.clone();
    let mut eval = evaluate_policy_lra(m, &policy)?;
    for iterations in 1..=MAX_IMPROVEMENT_ROUNDS {
        match improvement_round(m, &policy, &eval, tol) {
            None => return Ok(LraSolution { gain_bias: eval, policy, iterations }),
            Some(next) => {
                policy = next;
                eval = evaluate_policy_lra(m, &policy)?;
            }
        }
    }
    Err(Error::IterationLimit {
        what: "long-run average policy iteration",
        limit: MAX_IMPROVEMENT_ROUNDS,
        best: Some(Box::new(LraBestSoFar { gain: eval.gain, policy: policy.choice })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{MdpAction, Optimize};

    fn single(rows: Vec<Vec<(usize, f64)>>, r: Vec<f64>) -> Mdp {
        Mdp::new(
            rows.into_iter().zip(r).map(|(next, reward)| vec![MdpAction { reward, next }]).collect(),
            Optimize::Max,
        )
        .unwrap()
    }

    #[test]
    fn self_loop_gain() {
        let m = single(vec![vec![(0, 1.0)]], vec![5.0]);
        assert_eq!(evaluate_policy_lra(&m, &PurePolicy::new(vec![0])).unwrap().gain, vec![5.0]);
        assert_eq!(solve_lra_mdp(&m, 1e-9).unwrap().gain_bias.gain, vec![5.0]);
    }

    #[test]
    fn two_state_stationary_gain() {
        // q / (q + 1 - p) with p = 0.5, q = 0.3
        let m = single(vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.3), (1, 0.7)]], vec![1.0, 0.0]);
        let gb = evaluate_policy_lra(&m, &PurePolicy::new(vec![0, 0])).unwrap();
        for g in gb.gain {
            assert!((g - 0.375).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_loops_keep_distinct_gains() {
        let m = single(vec![vec![(0, 1.0)], vec![(1, 1.0)]], vec![1.0, 3.0]);
        let gb = evaluate_policy_lra(&m, &PurePolicy::new(vec![0, 0])).unwrap();
        assert_eq!(gb.gain, vec![1.0, 3.0]);
    }

    fn chooser(opt: Optimize) -> Mdp {
        Mdp::new(
            vec![
                vec![MdpAction::dirac(0.0, 1), MdpAction::dirac(0.0, 2)],
                vec![MdpAction::dirac(1.0, 1)],
                vec![MdpAction::dirac(3.0, 2)],
            ],
            opt,
        )
        .unwrap()
    }

    #[test]
    fn chooser_picks_high_arm() {
        let sol = solve_lra_mdp(&chooser(Optimize::Max), 1e-9).unwrap();
        assert_eq!(sol.gain_bias.gain[0], 3.0);
        assert_eq!(sol.policy.choice[0], 1);
        let sol = solve_lra_mdp(&chooser(Optimize::Min), 1e-9).unwrap();
        assert_eq!(sol.gain_bias.gain[0], 1.0);
        assert_eq!(sol.policy.choice[0], 0);
    }

    #[test]
    fn bias_stage_breaks_gain_ties() {
        // both actions reach the same absorbing loop; the first pays more on the way
        let m = Mdp::new(
            vec![
                vec![MdpAction::dirac(0.0, 1), MdpAction::dirac(2.0, 1)],
                vec![MdpAction::dirac(1.0, 1)],
            ],
            Optimize::Max,
        )
        .unwrap();
        let sol = solve_lra_mdp(&m, 1e-9).unwrap();
        assert_eq!(sol.policy.choice, vec![1, 0]);
        assert_eq!(sol.gain_bias.gain, vec![1.0, 1.0]);
    }

    #[test]
    fn vertex_choice_min_mode() {
        // M2 with the agent fixed: the environment chooses p in {0.9, 0.5}, q in {0.3, 0.6}
        let d = |s: usize, x: f64| {
            let _ = s;
            vec![(0, x), (1, 1.0 - x)]
        };
        let m = Mdp::new(
            vec![
                vec![MdpAction::new(1.0, d(0, 0.9)), MdpAction::new(1.0, d(0, 0.5))],
                vec![MdpAction::new(0.0, d(1, 0.3)), MdpAction::new(0.0, d(1, 0.6))],
            ],
            Optimize::Min,
        )
        .unwrap();
        let sol = solve_lra_mdp(&m, 1e-9).unwrap();
        assert!((sol.gain_bias.gain[0] - 0.375).abs() < 1e-12);
        assert_eq!(sol.policy.choice, vec![1, 0]);
    }

    #[test]
    fn illegal_policy_rejected() {
        let m = chooser(Optimize::Max);
        assert!(evaluate_policy_lra(&m, &PurePolicy::new(vec![2, 0, 0])).is_err());
        assert!(evaluate_policy_lra(&m, &PurePolicy::new(vec![0])).is_err());
    }
}
