use proptest::prelude::*;

use rmdp_core::baselines::robust_bellman;
use rmdp_core::benchgen::{gen_random_tiny, gen_random_tiny_sparse, SplitMix64};
use rmdp_core::game::{discount_vector, fix_player, pair_gain, strategy_iteration_discounted, PolicyPair};
use rmdp_core::mdp::{
    evaluate_discounted, evaluate_policy_lra, solve_discounted_mdp, solve_lra_mdp, Mdp, MdpAction, Optimize,
};
use rmdp_core::model::{validate_rmdp, Player, Violation};
use rmdp_core::oracle::policy_pair_limavg;
use rmdp_core::reduction::{
    lift_agent_policy, lift_env_policy, lower_agent_policy, lower_env_policy, reduce, DiscountMode, Objective,
};
use rmdp_core::{Distribution, PurePolicy, Rmdp, VertexSelection};

fn tiny() -> impl Strategy<Value = Rmdp> {
    (1usize..=4, 1usize..=3, 1usize..=3, any::<u64>(), any::<bool>()).prop_map(|(n, k, v, seed, sparse)| {
        if sparse {
            gen_random_tiny_sparse(n, k, v, seed).unwrap()
        } else {
            gen_random_tiny(n, k, v, seed).unwrap()
        }
    })
}

fn random_mdp(n: usize, k: usize, seed: u64, optimize: Optimize, sparse: bool) -> Mdp {
    let m = if sparse { gen_random_tiny_sparse(n, k, 1, seed) } else { gen_random_tiny(n, k, 1, seed) }.unwrap();
    let actions = (0..n)
        .map(|s| {
            (0..k).map(|a| MdpAction::new(m.reward(s, a), m.polytope(s, a).vertices[0].support().collect())).collect()
        })
        .collect();
    Mdp::new(actions, optimize).unwrap()
}

fn all_policies(counts: &[usize]) -> Vec<PurePolicy> {
    let mut out = vec![vec![]];
    for &c in counts {
        out = out.into_iter().flat_map(|p: Vec<usize>| (0..c).map(move |a| [p.clone(), vec![a]].concat())).collect();
    }
    out.into_iter().map(PurePolicy::new).collect()
}

fn random_selection(m: &Rmdp, rng: &mut SplitMix64) -> VertexSelection {
    VertexSelection {
        select: (0..m.n_states())
            .map(|s| (0..m.n_actions()).map(|a| rng.below(m.polytope(s, a).len())).collect())
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn json_round_trip_is_exact(m in tiny()) {
        let back = Rmdp::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn negative_probabilities_are_reported(m in tiny(), pick in any::<u64>()) {
        let mut m = m;
        let n = m.n_states();
        let (s, a, t) = ((pick as usize) % n, (pick as usize / 7) % m.n_actions(), (pick as usize / 31) % n);
        m.polytopes[s][a].vertices[0].0[t] = -0.25;
        let violations = validate_rmdp(&m);
        let flagged = violations.iter().any(|v| matches!(v, Violation::NegativeEntry { .. }));
        prop_assert!(flagged, "{:?}", violations);
    }

    #[test]
    fn off_simplex_vertices_are_reported(m in tiny(), pick in any::<u64>()) {
        let mut m = m;
        let (s, a) = ((pick as usize) % m.n_states(), (pick as usize / 7) % m.n_actions());
        for x in m.polytopes[s][a].vertices[0].0.iter_mut() {
            *x *= 1.01;
        }
        let flagged = validate_rmdp(&m).iter().any(|v| matches!(v, Violation::Simplex { .. }));
        prop_assert!(flagged);
    }

    #[test]
    fn bellman_is_monotone_and_contracting(m in tiny(), seed in any::<u64>(), gamma in 0.01f64..0.999) {
        let mut rng = SplitMix64::new(seed);
        let v: Vec<f64> = (0..m.n_states()).map(|_| rng.uniform_range(-10.0, 10.0)).collect();
        let w: Vec<f64> = v.iter().map(|x| x + rng.uniform_range(0.0, 5.0)).collect();
        let (tv, _) = robust_bellman(&m, &v, gamma);
        let (tw, _) = robust_bellman(&m, &w, gamma);
        let dist = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        for (a, b) in tv.iter().zip(&tw) {
            prop_assert!(a <= b);
            prop_assert!((a - b).abs() <= gamma * dist + 1e-12);
        }
    }

    #[test]
    fn interior_points_never_beat_vertices(m in tiny(), seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let values: Vec<f64> = (0..m.n_states()).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
        for p in m.polytopes.iter().flatten() {
            let (best, _) = p.min_expectation(&values);
            let weights = rng.simplex(p.len());
            let mut mix = vec![0.0; m.n_states()];
            for (w, v) in weights.iter().zip(&p.vertices) {
                for (x, y) in mix.iter_mut().zip(&v.0) {
                    *x += w * y;
                }
            }
            prop_assert!(Distribution(mix).dot(&values) >= best - 1e-12);
        }
    }

    #[test]
    fn lift_and_lower_are_inverse(m in tiny(), seed in any::<u64>()) {
        let map = rmdp_core::reduction::ReductionMap::new(&m);
        let mut rng = SplitMix64::new(seed);
        let sigma = PurePolicy::new((0..m.n_states()).map(|_| rng.below(m.n_actions())).collect());
        prop_assert_eq!(lower_agent_policy(&lift_agent_policy(&sigma, &map), &map), sigma);
        let pi = random_selection(&m, &mut rng);
        prop_assert_eq!(lower_env_policy(&lift_env_policy(&pi, &map), &map).unwrap(), pi);
    }

    #[test]
    fn reduction_preserves_pair_values(m in tiny(), seed in any::<u64>()) {
        let (g, map) = reduce(&m, Objective::LimAvg).unwrap();
        let mut rng = SplitMix64::new(seed);
        let sigma = PurePolicy::new((0..m.n_states()).map(|_| rng.below(m.n_actions())).collect());
        let pi = random_selection(&m, &mut rng);
        let direct = policy_pair_limavg(&m, &sigma, &pi).unwrap();
        let pair = PolicyPair { max_policy: lift_agent_policy(&sigma, &map), min_policy: lift_env_policy(&pi, &map) };
        let game = pair_gain(&g, &pair).unwrap();
        for s in 0..m.n_states() {
            prop_assert!((direct[s] - game.gain[map.max_state_of(s)]).abs() <= 1e-9);
        }
    }

    #[test]
    fn alternate_step_matches_direct_discounting(n in 1usize..=4, k in 1usize..=3, seed in any::<u64>(), gamma in 0.05f64..0.995) {
        let m = gen_random_tiny(n, k, 1, seed).unwrap();
        let (g, _) = reduce(&m, Objective::Discounted).unwrap();
        let sol = strategy_iteration_discounted(&g, gamma, DiscountMode::AlternateStep, 1e-12, None).unwrap();
        let direct = solve_discounted_mdp(&random_mdp(n, k, seed, Optimize::Max, false), gamma, 1e-12).unwrap();
        for s in 0..n {
            prop_assert!((sol.values[s] - direct.values[s]).abs() <= 1e-9 * (1.0 + direct.values[s].abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lra_policy_iteration_matches_enumeration(
        n in 1usize..=4, k in 1usize..=3, seed in any::<u64>(), sparse in any::<bool>(), maximize in any::<bool>()
    ) {
        let optimize = if maximize { Optimize::Max } else { Optimize::Min };
        let mdp = random_mdp(n, k, seed, optimize, sparse);
        let sol = solve_lra_mdp(&mdp, 1e-9).unwrap();
        let sign = if maximize { 1.0 } else { -1.0 };
        let mut best = vec![f64::NEG_INFINITY; n];
        for p in all_policies(&vec![k; n]) {
            let gb = evaluate_policy_lra(&mdp, &p).unwrap();
            for s in 0..n {
                best[s] = best[s].max(sign * gb.gain[s]);
            }
        }
        for s in 0..n {
            prop_assert!((sign * sol.gain_bias.gain[s] - best[s]).abs() <= 1e-9, "state {}: {} vs {}", s, sol.gain_bias.gain[s], sign * best[s]);
        }
    }

    #[test]
    fn discounted_policy_iteration_matches_value_iteration(seed in any::<u64>(), gamma in 0.1f64..0.95, sparse in any::<bool>()) {
        let mdp = random_mdp(4, 3, seed, Optimize::Max, sparse);
        let sol = solve_discounted_mdp(&mdp, gamma, 1e-13).unwrap();
        // plain value iteration, run until the fixed-point error bound is below 1e-13
        let mut v = vec![0.0; 4];
        loop {
            let next: Vec<f64> = mdp.actions.iter()
                .map(|acts| acts.iter().map(|a| a.reward + gamma * a.expect(&v)).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if delta * gamma / (1.0 - gamma) < 1e-13 {
                break;
            }
        }
        for s in 0..4 {
            prop_assert!((sol.values[s] - v[s]).abs() <= 1e-12, "{} vs {}", sol.values[s], v[s]);
        }
    }

    #[test]
    fn strategy_iteration_admits_no_profitable_switch(m in tiny(), gamma in 0.3f64..0.99, alternate in any::<bool>()) {
        let tol = 1e-10;
        let (objective, mode) = if alternate {
            (Objective::Discounted, DiscountMode::AlternateStep)
        } else {
            (Objective::LimAvg, DiscountMode::EveryStep)
        };
        let (g, _) = reduce(&m, objective).unwrap();
        prop_assume!(g.n_states() <= 16);
        let sol = strategy_iteration_discounted(&g, gamma, mode, tol, None).unwrap();
        let discounts = discount_vector(&g, gamma, mode);
        let values_of = |pair: &PolicyPair| {
            let mdp = fix_player(&g, Player::Min, &pair.min_policy);
            let mut c = pair.max_policy.choice.clone();
            c.extend(std::iter::repeat_n(0, g.n_min()));
            evaluate_discounted(&mdp, &discounts, &PurePolicy::new(c)).unwrap()
        };
        let base = values_of(&sol.pair);
        let counts_max = g.action_counts(Player::Max);
        let counts_min = g.action_counts(Player::Min);
        for u in 0..g.n_max() {
            for a in 0..counts_max[u] {
                let mut dev = sol.pair.clone();
                dev.max_policy.choice[u] = a;
                let v = values_of(&dev);
                prop_assert!(v.iter().zip(&base).all(|(x, y)| x - y <= 10.0 * tol + 1e-12 * (1.0 + y.abs())));
            }
        }
        for u in 0..g.n_min() {
            for a in 0..counts_min[u] {
                let mut dev = sol.pair.clone();
                dev.min_policy.choice[u] = a;
                let v = values_of(&dev);
                prop_assert!(v.iter().zip(&base).all(|(x, y)| y - x <= 10.0 * tol + 1e-12 * (1.0 + y.abs())));
            }
        }
    }
}
