//! Recurrent-class decomposition and exact gain/bias of a finite Markov chain.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{Mdp, PurePolicy};
use crate::error::Result;
use crate::linalg::{solve, Factored};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainDecomposition {
    /// Bottom strongly connected components, each sorted, ordered by their
    /// lowest state.
    pub recurrent_classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    pub class_of: Vec<Option<usize>>,
}

/// Gain `g` and bias `h` of a fixed-policy chain: `g = P g` and
/// `g + h = r + P h`, with `h = 0` at the lowest state of each recurrent class.
#[derive(Debug, Clone, PartialEq)]
pub struct GainBias {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
}

pub(crate) fn decompose_rows(rows: &[&[(usize, f64)]]) -> ChainDecomposition {
    let n = rows.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, rows.iter().map(|r| r.len()).sum());
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    for (s, row) in rows.iter().enumerate() {
        for &(t, p) in row.iter() {
            if p > 0.0 {
                graph.add_edge(nodes[s], nodes[t], ());
            }
        }
    }
    let mut comp_of = vec![0usize; n];
    let sccs = tarjan_scc(&graph);
    for (c, comp) in sccs.iter().enumerate() {
        for v in comp {
            comp_of[v.index()] = c;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, comp)| {
            comp.iter().all(|v| {
                rows[v.index()]
                    .iter()
                    .all(|&(t, p)| p <= 0.0 || comp_of[t] == *c)
            })
        })
        .map(|(_, comp)| {
            let mut states: Vec<usize> = comp.iter().map(|v| v.index()).collect();
            states.sort_unstable();
            states
        })
        .collect();
    classes.sort_unstable_by_key(|c| c[0]);

    let mut class_of = vec![None; n];
    for (k, class) in classes.iter().enumerate() {
        for &s in class {
            class_of[s] = Some(k);
        }
    }
    let transient = (0..n).filter(|&s| class_of[s].is_none()).collect();
    ChainDecomposition { recurrent_classes: classes, transient, class_of }
}

/// Recurrent classes of the chain `m` induces under `policy`.
pub fn chain_decompose(m: &Mdp, policy: &PurePolicy) -> Result<ChainDecomposition> {
    m.check_policy(policy)?;
    let (rows, _) = m.fix(policy);
    Ok(decompose_rows(&rows))
}

/// Exact gain and bias of the chain with sparse transition `rows`.
///
/// Per recurrent class, solves for the stationary distribution and then for
/// the bias pinned at the class's lowest state; transient states are resolved
/// through the absorbing system `(I - P_TT) x = ...`.
pub fn evaluate_chain(rows: &[&[(usize, f64)]], rewards: &[f64]) -> Result<GainBias> {
    let n = rows.len();
    let dec = decompose_rows(rows);
    let mut gain = vec![0.0; n];
    let mut bias = vec![0.0; n];

    for class in &dec.recurrent_classes {
        let k = class.len();
        let mut local = std::collections::HashMap::with_capacity(k);
        for (i, &s) in class.iter().enumerate() {
            local.insert(s, i);
        }
        // I - P restricted to the class (closed, so rows stay stochastic)
        let mut a = DMatrix::<f64>::identity(k, k);
        for (i, &s) in class.iter().enumerate() {
            for &(t, p) in rows[s] {
                if let Some(&j) = local.get(&t) {
                    a[(i, j)] -= p;
                }
            }
        }
        // stationary: (I - P)^T mu = 0 with the last equation replaced by sum(mu) = 1
        let mut st = a.transpose();
        st.row_mut(k - 1).fill(1.0);
        let mut rhs = DVector::zeros(k);
        rhs[k - 1] = 1.0;
        let mu = solve(st, &rhs, "stationary distribution")?;
        let g: f64 = class.iter().zip(mu.iter()).map(|(&s, m)| m * rewards[s]).sum();

        // bias: (I - P) h = r - g with h(class[0]) = 0
        let mut hb = a;
        hb.row_mut(0).fill(0.0);
        hb[(0, 0)] = 1.0;
        let mut rhs = DVector::from_iterator(k, class.iter().map(|&s| rewards[s] - g));
        rhs[0] = 0.0;
        let h = solve(hb, &rhs, "recurrent bias")?;
        for (i, &s) in class.iter().enumerate() {
            gain[s] = g;
            bias[s] = h[i];
        }
    }

    let t = dec.transient.len();
    if t > 0 {
        let mut local = vec![usize::MAX; n];
        for (i, &s) in dec.transient.iter().enumerate() {
            local[s] = i;
        }
        let mut a = DMatrix::<f64>::identity(t, t);
        let mut bg = DVector::zeros(t);
        let mut bh = DVector::zeros(t);
        for (i, &s) in dec.transient.iter().enumerate() {
            for &(j, p) in rows[s] {
                if local[j] != usize::MAX {
                    a[(i, local[j])] -= p;
                } else {
                    bg[i] += p * gain[j];
                    bh[i] += p * bias[j];
                }
            }
        }
        let lu = Factored::new(a, "transient absorption");
        let gt = lu.solve(&bg)?;
        for (i, &s) in dec.transient.iter().enumerate() {
            gain[s] = gt[i];
            bh[i] += rewards[s] - gt[i];
        }
        let ht = lu.solve(&bh)?;
        for (i, &s) in dec.transient.iter().enumerate() {
            bias[s] = ht[i];
        }
    }
    Ok(GainBias { gain, bias })
}
