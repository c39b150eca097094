//! Exact multi-stage solver by backward induction over the joint state space.
//!
//! The value of a joint state at the final stage is the closed-form
//! repair-the-failed cost; at earlier stages it is the minimum over feasible
//! decisions of the stage cost plus the expected value of the successor
//! state, where the successor distribution is the product of per-component
//! transition rows (reset rows for maintained components). The joint state
//! space has `m^n` points per stage, and each state evaluates up to
//! `2^(working)` decisions, so the solver is guarded to small systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StageDecision, SystemInstance};

const MAX_COMPONENTS: usize = 4;
const MAX_STATES: usize = 12;
const MAX_HORIZON: usize = 6;

/// Optimal decision table over (stage, joint state).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyTable {
    n: usize,
    m: usize,
    horizon: usize,
    /// `decisions[t-1][state_index]`: maintained-component bitmask.
    decisions: Vec<Vec<u32>>,
    /// `values[t-1][state_index]`: cost-to-go.
    values: Vec<Vec<f64>>,
}

impl PolicyTable {
    /// Mixed-radix index of a joint state vector (component 0 is the most
    /// significant digit).
    pub fn state_index(&self, states: &[usize]) -> usize {
        debug_assert_eq!(states.len(), self.n);
        states.iter().fold(0, |acc, &g| {
            debug_assert!((1..=self.m).contains(&g));
            acc * self.m + (g - 1)
        })
    }

    /// Optimal decision at 1-based stage `t` for the given joint state.
    pub fn decision_at(&self, t: usize, states: &[usize]) -> StageDecision {
        let mask = self.decisions[t - 1][self.state_index(states)];
        let maintain: Vec<bool> = (0..self.n).map(|i| mask & (1 << i) != 0).collect();
        let corrective: Vec<bool> = states.iter().map(|&g| g == self.m).collect();
        let setup = maintain.iter().any(|&x| x);
        StageDecision {
            maintain,
            corrective,
            setup,
        }
    }

    /// Cost-to-go at 1-based stage `t` for the given joint state.
    pub fn value_at(&self, t: usize, states: &[usize]) -> f64 {
        self.values[t - 1][self.state_index(states)]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Result of the exact multi-stage solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultistageSolution {
    /// Optimal expected total cost from the instance's initial states.
    pub value: f64,
    pub policy: PolicyTable,
}

/// Solve the multi-stage problem exactly. Guarded to `n <= 4`, `m <= 12`,
/// `T <= 6`. Ties between decisions break toward fewer maintained
/// components, then the lexicographically smallest maintenance mask.
pub fn exact_multistage(instance: &SystemInstance) -> Result<MultistageSolution> {
    let n = instance.len();
    let m = instance.state_count();
    let horizon = instance.horizon();
    if n > MAX_COMPONENTS || m > MAX_STATES || horizon > MAX_HORIZON {
        return Err(Error::Guard(format!(
            "exact multistage solve is limited to n <= {MAX_COMPONENTS}, m <= {MAX_STATES}, \
             T <= {MAX_HORIZON}; got n={n}, m={m}, T={horizon}"
        )));
    }

    let size = m.pow(n as u32);
    // strides of the mixed-radix index, component 0 most significant
    let mut stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * m;
    }

    let mut values = vec![vec![0.0f64; size]; horizon];
    let mut decisions = vec![vec![0u32; size]; horizon];

    let mut states = vec![1usize; n];
    for idx in 0..size {
        decode(idx, m, &mut states);
        let mut cost = 0.0;
        let mut mask = 0u32;
        for (i, &g) in states.iter().enumerate() {
            if g == m {
                cost += instance.component(i).cm_cost;
                mask |= 1 << i;
            }
        }
        if mask != 0 {
            cost += instance.setup_cost();
        }
        values[horizon - 1][idx] = cost;
        decisions[horizon - 1][idx] = mask;
    }

    let mut row_refs: Vec<&[f64]> = Vec::with_capacity(n);
    for t in (0..horizon - 1).rev() {
        let (current, future) = values.split_at_mut(t + 1);
        let value_next = &future[0];
        let value_now = &mut current[t];
        for idx in 0..size {
            decode(idx, m, &mut states);
            let mut failed_mask = 0u32;
            let mut working = Vec::with_capacity(n);
            for (i, &g) in states.iter().enumerate() {
                if g == m {
                    failed_mask |= 1 << i;
                } else {
                    working.push(i);
                }
            }
            let mut best_cost = f64::INFINITY;
            let mut best_mask = failed_mask;
            for sub in submasks_by_size(&working) {
                let x_mask = failed_mask | sub;
                let mut stage_cost = 0.0;
                for i in 0..n {
                    let c = instance.component(i);
                    if x_mask & (1 << i) != 0 {
                        stage_cost += c.pm_cost;
                    }
                    if failed_mask & (1 << i) != 0 {
                        stage_cost += c.cm_cost - c.pm_cost;
                    }
                }
                if x_mask != 0 {
                    stage_cost += instance.setup_cost();
                }
                row_refs.clear();
                for (i, &g) in states.iter().enumerate() {
                    let from = if x_mask & (1 << i) != 0 { 1 } else { g };
                    row_refs.push(instance.component(i).transition.row(from));
                }
                let expected = expected_value(&row_refs, value_next, &stride);
                let total = stage_cost + expected;
                if total < best_cost {
                    best_cost = total;
                    best_mask = x_mask;
                }
            }
            value_now[idx] = best_cost;
            decisions[t][idx] = best_mask;
        }
    }

    let policy = PolicyTable {
        n,
        m,
        horizon,
        decisions,
        values,
    };
    let value = policy.value_at(1, &instance.states());
    Ok(MultistageSolution { value, policy })
}

fn decode(idx: usize, m: usize, states: &mut [usize]) {
    let mut rest = idx;
    for g in states.iter_mut().rev() {
        *g = rest % m + 1;
        rest /= m;
    }
}

/// Submasks of the working set ordered by (popcount, mask value).
fn submasks_by_size(working: &[usize]) -> Vec<u32> {
    let w = working.len();
    let mut masks: Vec<u32> = (0..(1u32 << w))
        .map(|local| {
            let mut mask = 0u32;
            for (bit, &i) in working.iter().enumerate() {
                if local & (1 << bit) != 0 {
                    mask |= 1 << i;
                }
            }
            mask
        })
        .collect();
    masks.sort_unstable_by_key(|&mask| (mask.count_ones(), mask));
    masks
}

/// Expectation of `value_next` under the product distribution of the given
/// per-component rows, skipping zero-probability branches.
fn expected_value(rows: &[&[f64]], value_next: &[f64], stride: &[usize]) -> f64 {
    fn rec(
        comp: usize,
        base: usize,
        prob: f64,
        rows: &[&[f64]],
        value_next: &[f64],
        stride: &[usize],
    ) -> f64 {
        if comp == rows.len() {
            return prob * value_next[base];
        }
        let mut acc = 0.0;
        for (gp, &q) in rows[comp].iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            acc += rec(
                comp + 1,
                base + gp * stride[comp],
                prob * q,
                rows,
                value_next,
                stride,
            );
        }
        acc
    }
    rec(0, 0, 1.0, rows, value_next, stride)
}
