//! Small reference models with hand-checkable values.

use crate::model::{Distribution, Polytope, Rmdp};

/// One state, one action, Dirac self-loop, reward 5. Value 5 under every
/// objective normalization.
pub fn m1() -> Rmdp {
    Rmdp::from_tables(0, vec![vec![5.0]], vec![vec![Polytope::singleton(Distribution::dirac(1, 0))]])
}

/// Two states, one action, reward 1 at `s0` and 0 at `s1`, two vertices per
/// pair: `(s0,a) -> {(0.9,0.1), (0.5,0.5)}`, `(s1,a) -> {(0.3,0.7), (0.6,0.4)}`.
///
/// The environment minimizes the stationary mass `q / (q + 1 - p)` of `s0`,
/// where `p = P(s0 -> s0)` and `q = P(s1 -> s0)`; the optimum is
/// `p = 0.5, q = 0.3`, giving 0.375.
pub fn m2() -> Rmdp {
    let d = |x: f64| Distribution(vec![x, 1.0 - x]);
    Rmdp::from_tables(
        0,
        vec![vec![1.0], vec![0.0]],
        vec![
            vec![Polytope::new(vec![d(0.9), d(0.5)])],
            vec![Polytope::new(vec![d(0.3), d(0.6)])],
        ],
    )
}

/// A chooser state `c` with two Dirac arms: `go_low` into an absorbing loop
/// with reward 1 and `go_high` into an absorbing loop with reward 3. All
/// uncertainty sets are singletons. Long-run value 3 via `go_high`.
pub fn chooser() -> Rmdp {
    let dirac = |t| Polytope::singleton(Distribution::dirac(3, t));
    Rmdp {
        states: vec!["c".into(), "low".into(), "high".into()],
        actions: vec!["go_low".into(), "go_high".into()],
        initial: crate::model::StateId(0),
        rewards: vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![3.0, 3.0]],
        polytopes: vec![
            vec![dirac(1), dirac(2)],
            vec![dirac(1), dirac(1)],
            vec![dirac(2), dirac(2)],
        ],
    }
}
