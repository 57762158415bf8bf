//! Deterministic benchmark generators: the contamination model, Frozen Lake
//! in unichain and multichain variants, and random tiny instances for oracle
//! checks. Every draw comes from [`SplitMix64`] in a fixed documented order,
//! so the same settings yield a bitwise-identical model.

mod rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Distribution, Polytope, Rmdp, StateId};

pub use rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub n: usize,
    /// Contamination level R in [0, 1].
    pub r: f64,
    pub seed: u64,
}

/// Contamination model: `n` states, `n + 10` actions.
///
/// Draw order, for each state `s` then action `a`: the nominal distribution
/// (uniform on the simplex), then `σ ~ U(0,1)`, then the reward
/// `σ · N(0,1)`. The uncertainty set at `(s,a)` is
/// `{(1-R)·nominal + R·p : p ∈ Δ(S)}`, listed by its Dirac corners
/// `(1-R)·nominal + R·e_t`; with `R = 0` it collapses to the nominal point.
pub fn gen_contamination(spec: &ContaminationSpec) -> Result<Rmdp> {
    if spec.n == 0 || !(0.0..=1.0).contains(&spec.r) {
        return Err(Error::Parse(format!("contamination spec needs n >= 1 and R in [0,1], got {spec:?}")));
    }
    let n = spec.n;
    let k = n + 10;
    let mut rng = SplitMix64::new(spec.seed);
    let mut rewards = vec![vec![0.0; k]; n];
    let mut polytopes = Vec::with_capacity(n);
    for row in rewards.iter_mut() {
        let mut prow = Vec::with_capacity(k);
        for r in row.iter_mut() {
            let nominal = rng.simplex(n);
            let sigma = rng.uniform();
            *r = sigma * rng.normal();
            let corners = (0..n)
                .map(|t| {
                    let mut v: Vec<f64> = nominal.iter().map(|p| (1.0 - spec.r) * p).collect();
                    v[t] += spec.r;
                    Distribution(v)
                })
                .collect();
            prow.push(Polytope::dedup_from(corners));
        }
        polytopes.push(prow);
    }
    Ok(Rmdp::from_tables(0, rewards, polytopes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LakeVariant {
    /// Holes are walls: moving into one leaves the agent in place.
    Unichain,
    /// Holes are absorbing states with reward 0.
    Multichain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenLakeSpec {
    /// Grid side.
    pub n: usize,
    /// Hole cells as `(row, column)`.
    pub holes: Vec<(usize, usize)>,
    /// Largest probability shift toward one neighbouring cell.
    pub d: f64,
    pub variant: LakeVariant,
    /// Kept for interface symmetry; the lake construction draws no randomness.
    pub seed: u64,
}

/// Hole layout used when none is given. `n = 2` and `n = 3` get a single
/// hole, `n = 4` uses the classic 4x4 map; larger grids put one hole on every
/// odd row `r < n - 1`, at column `r (r + 1) / 2 mod (n - 1)`. Every layout
/// leaves the free cells connected.
pub fn default_holes(n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => vec![],
        2 => vec![(0, 1)],
        3 => vec![(1, 1)],
        4 => vec![(1, 1), (1, 3), (2, 3), (3, 0)],
        _ => (1..n - 1).step_by(2).map(|r| (r, (r * (r + 1) / 2) % (n - 1))).collect(),
    }
}

const LAKE_ACTIONS: [(&str, (isize, isize)); 4] =
    [("left", (0, -1)), ("right", (0, 1)), ("up", (-1, 0)), ("down", (1, 0))];

/// Slippery Frozen Lake as a polytopic RMDP.
///
/// The intended move succeeds with probability 1/3 and each perpendicular
/// move happens with probability 1/3; moves off the grid (or into a wall in
/// the unichain variant) stay put. The reward is `1 / (1 + distance to the
/// goal)` in Manhattan distance, independent of the action. Besides the
/// nominal distribution, each uncertainty set lists, for every neighbouring
/// target cell, the distribution shifted by up to `d` toward that cell with
/// the removed mass taken uniformly from the other reachable cells.
pub fn gen_frozen_lake(spec: &FrozenLakeSpec) -> Result<Rmdp> {
    let n = spec.n;
    if n == 0 || !(0.0..1.0).contains(&spec.d) {
        return Err(Error::Parse(format!("frozen lake needs n >= 1 and d in [0,1), got {spec:?}")));
    }
    let goal = (n - 1, n - 1);
    let mut hole = vec![vec![false; n]; n];
    for &(r, c) in &spec.holes {
        if r >= n || c >= n {
            return Err(Error::Parse(format!("hole ({r},{c}) lies outside the {n}x{n} grid")));
        }
        if (r, c) == (0, 0) || (r, c) == goal {
            return Err(Error::Parse(format!("hole ({r},{c}) covers the start or the goal")));
        }
        hole[r][c] = true;
    }

    let is_state = |r: usize, c: usize| spec.variant == LakeVariant::Multichain || !hole[r][c];
    let mut index = vec![vec![usize::MAX; n]; n];
    let mut cells = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if is_state(r, c) {
                index[r][c] = cells.len();
                cells.push((r, c));
            }
        }
    }
    let ns = cells.len();
    let step = |(r, c): (usize, usize), (dr, dc): (isize, isize)| -> usize {
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        if nr < 0 || nc < 0 || nr >= n as isize || nc >= n as isize {
            return index[r][c];
        }
        let (nr, nc) = (nr as usize, nc as usize);
        if is_state(nr, nc) {
            index[nr][nc]
        } else {
            index[r][c]
        }
    };

    let mut rewards = Vec::with_capacity(ns);
    let mut polytopes = Vec::with_capacity(ns);
    for &(r, c) in &cells {
        let here = index[r][c];
        if hole[r][c] {
            rewards.push(vec![0.0; 4]);
            polytopes.push(vec![Polytope::singleton(Distribution::dirac(ns, here)); 4]);
            continue;
        }
        let reward = 1.0 / (1.0 + ((goal.0 - r) + (goal.1 - c)) as f64);
        rewards.push(vec![reward; 4]);

        let mut neighbours: Vec<usize> =
            LAKE_ACTIONS.iter().map(|&(_, dir)| step((r, c), dir)).filter(|&t| t != here).collect();
        neighbours.sort_unstable();
        neighbours.dedup();

        let mut row = Vec::with_capacity(4);
        for &(_, (dr, dc)) in &LAKE_ACTIONS {
            let perpendicular = [(dc, dr), (-dc, -dr)];
            let mut nominal = vec![0.0; ns];
            for dir in std::iter::once((dr, dc)).chain(perpendicular) {
                nominal[step((r, c), dir)] += 1.0 / 3.0;
            }
            let mut points = vec![Distribution(nominal.clone())];
            for &t in &neighbours {
                if nominal[t] < 1.0 {
                    points.push(Distribution(tilt(&nominal, t, spec.d)));
                }
            }
            row.push(Polytope::dedup_from(points));
        }
        polytopes.push(row);
    }

    Ok(Rmdp {
        states: cells.iter().map(|(r, c)| format!("r{r}c{c}")).collect(),
        actions: LAKE_ACTIONS.iter().map(|(name, _)| name.to_string()).collect(),
        initial: StateId(index[0][0]),
        rewards,
        polytopes,
    })
}

/// Moves `min(d, 1 - p[t])` of mass onto `t`, removing it evenly from the
/// other positive entries; entries that would go negative are floored at 0
/// and the shortfall is spread over the rest.
fn tilt(p: &[f64], t: usize, d: f64) -> Vec<f64> {
    let mut out = p.to_vec();
    let inc = d.min(1.0 - p[t]);
    let mut remaining = inc;
    loop {
        let donors: Vec<usize> = (0..out.len()).filter(|&i| i != t && out[i] > 0.0).collect();
        if donors.is_empty() || remaining <= 1e-15 {
            break;
        }
        let share = remaining / donors.len() as f64;
        for i in donors {
            let take = share.min(out[i]);
            out[i] -= take;
            remaining -= take;
        }
    }
    out[t] += inc - remaining;
    out
}

fn check_tiny_bounds(n_states: usize, n_actions: usize, max_vertices: usize) -> Result<()> {
    if !(1..=4).contains(&n_states) || !(1..=3).contains(&n_actions) || !(1..=3).contains(&max_vertices) {
        return Err(Error::Parse(format!(
            "tiny instances need 1..=4 states, 1..=3 actions, 1..=3 vertices; got {n_states}, {n_actions}, {max_vertices}"
        )));
    }
    Ok(())
}

/// Random tiny RMDP. For each `(s,a)`: reward `U(-1,1)`, vertex count
/// uniform in `1..=max_vertices`, each vertex uniform on the simplex;
/// repeated vertices are dropped.
pub fn gen_random_tiny(n_states: usize, n_actions: usize, max_vertices: usize, seed: u64) -> Result<Rmdp> {
    check_tiny_bounds(n_states, n_actions, max_vertices)?;
    let mut rng = SplitMix64::new(seed);
    tiny_with(n_states, n_actions, |rng| {
        let k = 1 + rng.below(max_vertices);
        (0..k).map(|_| Distribution(rng.simplex(n_states))).collect()
    }, &mut rng)
}

/// Like [`gen_random_tiny`], but every vertex is supported on a random subset
/// of states (size uniform in `1..=n_states`), so fixed-policy chains are
/// often multichain or periodic.
pub fn gen_random_tiny_sparse(n_states: usize, n_actions: usize, max_vertices: usize, seed: u64) -> Result<Rmdp> {
    check_tiny_bounds(n_states, n_actions, max_vertices)?;
    let mut rng = SplitMix64::new(seed);
    tiny_with(n_states, n_actions, |rng| {
        let k = 1 + rng.below(max_vertices);
        (0..k)
            .map(|_| {
                let size = 1 + rng.below(n_states);
                let mut order: Vec<usize> = (0..n_states).collect();
                for i in 0..size {
                    let j = i + rng.below(n_states - i);
                    order.swap(i, j);
                }
                let weights = rng.simplex(size);
                let mut v = vec![0.0; n_states];
                for (&s, w) in order[..size].iter().zip(weights) {
                    v[s] = w;
                }
                Distribution(v)
            })
            .collect()
    }, &mut rng)
}

fn tiny_with(
    n_states: usize,
    n_actions: usize,
    mut vertices: impl FnMut(&mut SplitMix64) -> Vec<Distribution>,
    rng: &mut SplitMix64,
) -> Result<Rmdp> {
    let mut rewards = vec![vec![0.0; n_actions]; n_states];
    let mut polytopes = Vec::with_capacity(n_states);
    for row in rewards.iter_mut() {
        let mut prow = Vec::with_capacity(n_actions);
        for r in row.iter_mut() {
            *r = rng.uniform_range(-1.0, 1.0);
            prow.push(Polytope::dedup_from(vertices(rng)));
        }
        polytopes.push(prow);
    }
    Ok(Rmdp::from_tables(0, rewards, polytopes))
}
