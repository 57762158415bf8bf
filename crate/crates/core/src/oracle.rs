//! Brute-force ground truth for tiny instances.
//!
//! Values are computed by enumerating pure positional policies and
//! evaluating each induced Markov chain directly: recurrent classes from a
//! reachability closure, class gains from stationary distributions, transient
//! states from absorption. Nothing here goes through the policy-iteration
//! code in [`crate::mdp`], except the hybrid mode's environment best response.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::LINSOLVE_TOL;
use crate::game::LRA_TOL;
use crate::mdp::{solve_lra_mdp, Mdp, MdpAction, Optimize};
use crate::model::{Player, PurePolicy, Rmdp, Tbsg, VertexSelection};
use crate::reduction::{lift_env_policy, ReductionMap};
use crate::report::{millis, Algorithm, SolveReport};

/// Caps on the number of pure positional policies the oracle will enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    pub max_agent_policies: u64,
    pub max_env_policies: u64,
}

impl EnumerationBudget {
    /// The same cap for both players.
    pub fn uniform(cap: u64) -> Self {
        EnumerationBudget { max_agent_policies: cap.max(1), max_env_policies: cap.max(1) }
    }
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget::uniform(10_000_000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Both players enumerated.
    Full,
    /// Agent enumerated, environment answered by an exact MDP solve.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceValue {
    pub maxmin: f64,
    /// Only available in full mode.
    pub minmax: Option<f64>,
    pub argmax_policy: PurePolicy,
    /// An environment response attaining `maxmin` against `argmax_policy`.
    pub argmin_selection: Option<VertexSelection>,
    pub mode: OracleMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceTbsgValue {
    pub maxmin: f64,
    pub minmax: f64,
    pub max_policy: PurePolicy,
}

/// Long-run average value from every state of the chain `(rows, rewards)`.
fn chain_limavg(p: &DMatrix<f64>, r: &[f64]) -> Result<Vec<f64>> {
    let n = r.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let recurrent: Vec<bool> = (0..n).map(|i| (0..n).all(|j| !reach[i][j] || reach[j][i])).collect();

    let mut gain = vec![f64::NAN; n];
    let mut done = vec![false; n];
    for i in 0..n {
        if !recurrent[i] || done[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
        let k = class.len();
        // stationary distribution: (P_C - I)^T x = 0 with one equation swapped for sum(x) = 1
        let mut a = DMatrix::<f64>::zeros(k, k);
        for (ci, &u) in class.iter().enumerate() {
            for (cj, &v) in class.iter().enumerate() {
                a[(cj, ci)] = p[(u, v)] - if u == v { 1.0 } else { 0.0 };
            }
        }
        let mut b = DVector::<f64>::zeros(k);
        for c in 0..k {
            a[(k - 1, c)] = 1.0;
        }
        b[k - 1] = 1.0;
        let x = full_pivot_solve(a, b, "stationary distribution")?;
        let g: f64 = class.iter().zip(x.iter()).map(|(&u, w)| w * r[u]).sum();
        for &u in &class {
            gain[u] = g;
            done[u] = true;
        }
    }

    let transient: Vec<usize> = (0..n).filter(|&i| !recurrent[i]).collect();
    if !transient.is_empty() {
        let k = transient.len();
        let mut a = DMatrix::<f64>::identity(k, k);
        let mut b = DVector::<f64>::zeros(k);
        for (ti, &u) in transient.iter().enumerate() {
            for (tj, &v) in transient.iter().enumerate() {
                a[(ti, tj)] -= p[(u, v)];
            }
            b[ti] = (0..n).filter(|&v| recurrent[v]).map(|v| p[(u, v)] * gain[v]).sum();
        }
        let x = full_pivot_solve(a, b, "absorption")?;
        for (ti, &u) in transient.iter().enumerate() {
            gain[u] = x[ti];
        }
    }
    Ok(gain)
}

fn full_pivot_solve(a: DMatrix<f64>, b: DVector<f64>, context: &'static str) -> Result<DVector<f64>> {
    let x = a.clone().full_piv_lu().solve(&b).ok_or(Error::Singular { context: context.into(), residual: f64::INFINITY })?;
    let residual = (&a * &x - &b).amax();
    let scale = 1.0f64.max(a.row_iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) * x.amax() + b.amax());
    if residual > LINSOLVE_TOL * scale {
        return Err(Error::Singular { context: context.into(), residual });
    }
    Ok(x)
}

/// Exact long-run average value of the chain induced by agent policy `sigma`
/// and vertex selection `pi`, from every state.
pub fn policy_pair_limavg(m: &Rmdp, sigma: &PurePolicy, pi: &VertexSelection) -> Result<Vec<f64>> {
    m.ensure_valid()?;
    sigma.check_legal(std::iter::repeat_n(m.n_actions(), m.n_states()))?;
    check_selection(m, pi)?;
    let n = m.n_states();
    let mut p = DMatrix::<f64>::zeros(n, n);
    let mut r = vec![0.0; n];
    for s in 0..n {
        let a = sigma.choice[s];
        r[s] = m.reward(s, a);
        for (t, &q) in m.polytope(s, a).vertices[pi.select[s][a]].0.iter().enumerate() {
            p[(s, t)] = q;
        }
    }
    chain_limavg(&p, &r)
}

fn check_selection(m: &Rmdp, pi: &VertexSelection) -> Result<()> {
    let ok = pi.select.len() == m.n_states()
        && pi.select.iter().enumerate().all(|(s, row)| {
            row.len() == m.n_actions() && row.iter().enumerate().all(|(a, &j)| j < m.polytope(s, a).len())
        });
    if ok {
        Ok(())
    } else {
        Err(Error::IllegalPolicy("vertex selection does not match the model's shape".into()))
    }
}

fn product(counts: impl IntoIterator<Item = usize>) -> u64 {
    counts.into_iter().fold(1u64, |acc, c| acc.saturating_mul(c as u64))
}

fn decode(mut index: u64, radix: &[usize], out: &mut [usize]) {
    for (slot, &base) in out.iter_mut().zip(radix) {
        *slot = (index % base as u64) as usize;
        index /= base as u64;
    }
}

/// A finite two-player arena seen through the oracle: agent positions with
/// their choice counts, environment positions with theirs, and for each agent
/// policy the environment positions that can influence the initial value.
struct Arena<'a> {
    agent_counts: Vec<usize>,
    env_counts: Vec<usize>,
    relevant: &'a (dyn Fn(&[usize]) -> Vec<usize> + Sync),
    value: &'a (dyn Fn(&[usize], &[usize]) -> Result<f64> + Sync),
}

struct Table {
    relevant: Vec<usize>,
    values: Vec<f64>,
}

struct Enumerated {
    maxmin: f64,
    minmax: f64,
    argmax: usize,
    argmin_env: Vec<usize>,
}

/// Prefers the larger value, then the smaller index, so the parallel
/// reduction does not depend on scheduling.
fn better_max(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn enumerate_full(arena: &Arena) -> Result<Enumerated> {
    let n_agent = product(arena.agent_counts.iter().copied());
    let tables: Vec<Table> = (0..n_agent)
        .into_par_iter()
        .map(|i| {
            let mut sigma = vec![0; arena.agent_counts.len()];
            decode(i, &arena.agent_counts, &mut sigma);
            let relevant = (arena.relevant)(&sigma);
            let radix: Vec<usize> = relevant.iter().map(|&e| arena.env_counts[e]).collect();
            let mut env = vec![0; arena.env_counts.len()];
            let mut local = vec![0; relevant.len()];
            let values = (0..product(radix.iter().copied()))
                .map(|j| {
                    decode(j, &radix, &mut local);
                    for (&e, &c) in relevant.iter().zip(&local) {
                        env[e] = c;
                    }
                    (arena.value)(&sigma, &env)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Table { relevant, values })
        })
        .collect::<Result<_>>()?;

    let (maxmin, argmax) = tables
        .par_iter()
        .enumerate()
        .map(|(i, t)| (t.values.iter().copied().fold(f64::INFINITY, f64::min), i))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), better_max);
    let best = &tables[argmax];
    let inner = best.values.iter().position(|&v| v == maxmin).unwrap_or(0);
    let mut argmin_env = vec![0; arena.env_counts.len()];
    let radix: Vec<usize> = best.relevant.iter().map(|&e| arena.env_counts[e]).collect();
    let mut local = vec![0; radix.len()];
    decode(inner as u64, &radix, &mut local);
    for (&e, &c) in best.relevant.iter().zip(&local) {
        argmin_env[e] = c;
    }

    // minmax: only positions relevant to some agent policy need enumerating
    let mut used: Vec<usize> = tables.iter().flat_map(|t| t.relevant.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    let used_radix: Vec<usize> = used.iter().map(|&e| arena.env_counts[e]).collect();
    let mut slot = vec![usize::MAX; arena.env_counts.len()];
    for (k, &e) in used.iter().enumerate() {
        slot[e] = k;
    }
    let minmax = (0..product(used_radix.iter().copied()))
        .into_par_iter()
        .map(|j| {
            let mut choice = vec![0; used.len()];
            decode(j, &used_radix, &mut choice);
            tables
                .iter()
                .map(|t| {
                    let mut idx = 0usize;
                    for &e in t.relevant.iter().rev() {
                        idx = idx * arena.env_counts[e] + choice[slot[e]];
                    }
                    t.values[idx]
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::INFINITY, f64::min);

    Ok(Enumerated { maxmin, minmax, argmax, argmin_env })
}

fn rmdp_relevant(m: &Rmdp, sigma: &[usize]) -> Vec<usize> {
    let n = m.n_states();
    let mut seen = vec![false; n];
    let mut stack = vec![m.initial.0];
    seen[m.initial.0] = true;
    while let Some(s) = stack.pop() {
        for v in &m.polytope(s, sigma[s]).vertices {
            for (t, _) in v.support() {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    (0..n).filter(|&s| seen[s]).map(|s| s * m.n_actions() + sigma[s]).collect()
}

/// Max-min and min-max values at the initial state over pure positional
/// policies, by enumeration.
///
/// Full mode needs `|A|^|S|` and `Π |V(s,a)|` within the respective caps.
/// When only the agent count fits, the oracle falls back to hybrid mode,
/// which answers each agent policy with an exact environment MDP solve and
/// reports no min-max value. Beyond that it returns [`Error::Budget`].
pub fn brute_force_value(m: &Rmdp, budget: EnumerationBudget) -> Result<BruteForceValue> {
    m.ensure_valid()?;
    let n_agent = product(std::iter::repeat_n(m.n_actions(), m.n_states()));
    if n_agent > budget.max_agent_policies {
        return Err(Error::Budget { needed: n_agent as f64, budget: budget.max_agent_policies as f64 });
    }
    let n_env = product(m.polytopes.iter().flatten().map(|p| p.len()));
    if n_env > budget.max_env_policies {
        return hybrid_value(m, budget);
    }

    let k = m.n_actions();
    let relevant = |sigma: &[usize]| rmdp_relevant(m, sigma);
    let value = |sigma: &[usize], env: &[usize]| -> Result<f64> {
        let select = (0..m.n_states()).map(|s| env[s * k..(s + 1) * k].to_vec()).collect();
        Ok(policy_pair_limavg(m, &PurePolicy::new(sigma.to_vec()), &VertexSelection { select })?[m.initial.0])
    };
    let arena = Arena {
        agent_counts: vec![k; m.n_states()],
        env_counts: m.polytopes.iter().flatten().map(|p| p.len()).collect(),
        relevant: &relevant,
        value: &value,
    };
    let e = enumerate_full(&arena)?;
    let mut sigma = vec![0; m.n_states()];
    decode(e.argmax as u64, &arena.agent_counts, &mut sigma);
    let select = (0..m.n_states()).map(|s| e.argmin_env[s * k..(s + 1) * k].to_vec()).collect();
    Ok(BruteForceValue {
        maxmin: e.maxmin,
        minmax: Some(e.minmax),
        argmax_policy: PurePolicy::new(sigma),
        argmin_selection: Some(VertexSelection { select }),
        mode: OracleMode::Full,
    })
}

/// Hybrid mode regardless of the environment count.
pub fn hybrid_value(m: &Rmdp, budget: EnumerationBudget) -> Result<BruteForceValue> {
    m.ensure_valid()?;
    let n = m.n_states();
    let k = m.n_actions();
    let n_agent = product(std::iter::repeat_n(k, n));
    if n_agent > budget.max_agent_policies {
        return Err(Error::Budget { needed: n_agent as f64, budget: budget.max_agent_policies as f64 });
    }
    let counts = vec![k; n];
    let (maxmin, argmax) = (0..n_agent)
        .into_par_iter()
        .map(|i| {
            let mut sigma = vec![0; n];
            decode(i, &counts, &mut sigma);
            let env = Mdp::new(
                (0..n)
                    .map(|s| {
                        let a = sigma[s];
                        m.polytope(s, a)
                            .vertices
                            .iter()
                            .map(|v| MdpAction::new(m.reward(s, a), v.support().collect()))
                            .collect()
                    })
                    .collect(),
                Optimize::Min,
            )?;
            Ok((solve_lra_mdp(&env, LRA_TOL)?.gain_bias.gain[m.initial.0], i as usize))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::NEG_INFINITY, usize::MAX), better_max);
    let mut sigma = vec![0; n];
    decode(argmax as u64, &counts, &mut sigma);
    Ok(BruteForceValue {
        maxmin,
        minmax: None,
        argmax_policy: PurePolicy::new(sigma),
        argmin_selection: None,
        mode: OracleMode::Hybrid,
    })
}

/// Brute force packaged as a solver report.
pub fn brute_force_solve(m: &Rmdp, budget: EnumerationBudget) -> Result<SolveReport> {
    let start = Instant::now();
    let v = brute_force_value(m, budget)?;
    let env_policy = v.argmin_selection.as_ref().map(|sel| lift_env_policy(sel, &ReductionMap::new(m)));
    Ok(SolveReport {
        value_at_initial: v.maxmin,
        values: None,
        agent_policy: v.argmax_policy,
        env_policy,
        algorithm: Algorithm::Brute,
        outer_iterations: 1,
        inner_iterations: 0,
        final_gamma: None,
        wall_clock_seconds: millis(start.elapsed()),
    })
}

/// Max-min and min-max long-run average values of a game at its initial
/// state, by enumeration over pure positional pairs. Discounting metadata is
/// ignored.
pub fn brute_force_tbsg_value(g: &Tbsg, budget: EnumerationBudget) -> Result<BruteForceTbsgValue> {
    g.ensure_valid()?;
    let max_counts = g.action_counts(Player::Max);
    let min_counts = g.action_counts(Player::Min);
    let n_max = product(max_counts.iter().copied());
    let n_min = product(min_counts.iter().copied());
    if n_max > budget.max_agent_policies {
        return Err(Error::Budget { needed: n_max as f64, budget: budget.max_agent_policies as f64 });
    }
    if n_min > budget.max_env_policies {
        return Err(Error::Budget { needed: n_min as f64, budget: budget.max_env_policies as f64 });
    }
    let nm = g.n_max();
    let n = g.n_states();
    let relevant = |sigma: &[usize]| {
        let mut seen = vec![false; n];
        let mut stack = vec![g.initial];
        seen[g.initial] = true;
        while let Some(u) = stack.pop() {
            let acts: Vec<_> = if u < nm { vec![&g.actions[u][sigma[u]]] } else { g.actions[u].iter().collect() };
            for act in acts {
                for (t, _) in act.next.support() {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        (nm..n).filter(|&u| seen[u]).map(|u| u - nm).collect()
    };
    let value = |sigma: &[usize], pi: &[usize]| -> Result<f64> {
        let mut p = DMatrix::<f64>::zeros(n, n);
        let mut r = vec![0.0; n];
        for u in 0..n {
            let act = if u < nm { &g.actions[u][sigma[u]] } else { &g.actions[u][pi[u - nm]] };
            r[u] = act.reward;
            for (t, &q) in act.next.0.iter().enumerate() {
                p[(u, t)] = q;
            }
        }
        Ok(chain_limavg(&p, &r)?[g.initial])
    };
    let arena = Arena { agent_counts: max_counts, env_counts: min_counts, relevant: &relevant, value: &value };
    let e = enumerate_full(&arena)?;
    let mut sigma = vec![0; nm];
    decode(e.argmax as u64, &arena.agent_counts, &mut sigma);
    Ok(BruteForceTbsgValue { maxmin: e.maxmin, minmax: e.minmax, max_policy: PurePolicy::new(sigma) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{chooser, m1, m2};
    use crate::model::{Distribution, Polytope};
    use crate::reduction::{reduce, Objective};

    fn budget() -> EnumerationBudget {
        EnumerationBudget::default()
    }

    #[test]
    fn pair_values() {
        let v = policy_pair_limavg(&m1(), &PurePolicy::new(vec![0]), &VertexSelection::first_vertices(&m1())).unwrap();
        assert_eq!(v, vec![5.0]);
        let sel = VertexSelection { select: vec![vec![1], vec![0]] };
        let v = policy_pair_limavg(&m2(), &PurePolicy::new(vec![0, 0]), &sel).unwrap();
        for x in v {
            assert!((x - 0.375).abs() < 1e-12);
        }
    }

    #[test]
    fn absorption_mix() {
        let d = |t| Polytope::singleton(Distribution::dirac(3, t));
        let m = Rmdp::from_tables(
            0,
            vec![vec![0.0], vec![1.0], vec![3.0]],
            vec![vec![Polytope::singleton(Distribution(vec![0.0, 0.5, 0.5]))], vec![d(1)], vec![d(2)]],
        );
        let v = policy_pair_limavg(&m, &PurePolicy::new(vec![0; 3]), &VertexSelection::first_vertices(&m)).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12);
        assert_eq!((v[1], v[2]), (1.0, 3.0));
    }

    #[test]
    fn reference_values() {
        let v = brute_force_value(&m1(), budget()).unwrap();
        assert_eq!((v.maxmin, v.minmax), (5.0, Some(5.0)));
        let v = brute_force_value(&m2(), budget()).unwrap();
        assert!((v.maxmin - 0.375).abs() < 1e-12);
        assert!((v.minmax.unwrap() - 0.375).abs() < 1e-12);
        assert_eq!(v.argmin_selection.unwrap().select, vec![vec![1], vec![0]]);
        let v = brute_force_value(&chooser(), budget()).unwrap();
        assert_eq!(v.maxmin, 3.0);
        assert_eq!(v.argmax_policy.choice[0], 1);
    }

    #[test]
    fn game_values() {
        for (m, want) in [(m1(), 5.0), (m2(), 0.375), (chooser(), 3.0)] {
            let (g, _) = reduce(&m, Objective::LimAvg).unwrap();
            let v = brute_force_tbsg_value(&g, budget()).unwrap();
            assert!((v.maxmin - want).abs() < 1e-12 && (v.minmax - want).abs() < 1e-12);
        }
    }

    #[test]
    fn hybrid_agrees_with_full() {
        for m in [m1(), m2(), chooser()] {
            let full = brute_force_value(&m, budget()).unwrap();
            let hybrid = hybrid_value(&m, budget()).unwrap();
            assert!((full.maxmin - hybrid.maxmin).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_modes() {
        let tight = EnumerationBudget { max_agent_policies: 100, max_env_policies: 1 };
        assert_eq!(brute_force_value(&m2(), tight).unwrap().mode, OracleMode::Hybrid);
        let none = EnumerationBudget { max_agent_policies: 1, max_env_policies: 1 };
        assert!(matches!(brute_force_value(&chooser(), none), Err(Error::Budget { .. })));
        let (g, _) = reduce(&m2(), Objective::LimAvg).unwrap();
        assert!(matches!(brute_force_tbsg_value(&g, none), Err(Error::Budget { .. })));
    }

    #[test]
    fn brute_report() {
        let r = brute_force_solve(&m2(), budget()).unwrap();
        assert_eq!(r.algorithm, Algorithm::Brute);
        assert!(r.is_consistent(m2().initial.0, 2));
    }
}
