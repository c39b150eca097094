//! Shared fixtures and independent oracles for the integration suites.
//!
//! Everything in here recomputes model quantities from first principles
//! (scenario enumeration, per-component cost decomposition, raw recursion)
//! so the production code paths are checked against genuinely independent
//! routes.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use cbm_core::bench::{sample_instance, BenchConfig};
use cbm_core::{ComponentSpec, Partition, SystemInstance, TransitionMatrix};

/// |a - b| within `tol`, scaled by max(1, |a|, |b|).
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Baseline-regime instance of size `n` keyed by (seed, index).
pub fn baseline_instance(seed: u64, n: usize, index: usize) -> SystemInstance {
    let config = BenchConfig {
        seed,
        ..BenchConfig::default()
    };
    sample_instance(&config, n, index).expect("baseline sampling")
}

/// Random instance with explicit upper-triangular transition matrices over a
/// small state space: faster than gamma discretization and exercises
/// arbitrary row shapes.
pub fn random_explicit_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    setup_cost: f64,
    horizon: usize,
) -> SystemInstance {
    let components = (0..n)
        .map(|i| {
            // failure probabilities nondecreasing in the state, so repairs
            // never increase risk (the model's premise)
            let mut fail: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.01..0.95)).collect();
            fail.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut rows = Vec::with_capacity(m);
            for g in 1..=m {
                let mut row = vec![0.0; m];
                if g == m {
                    row[m - 1] = 1.0;
                } else {
                    row[m - 1] = fail[g - 1];
                    let mut weights = vec![0.0; m - g];
                    let mut total = 0.0;
                    for w in weights.iter_mut() {
                        *w = rng.random_range(0.05..1.0);
                        total += *w;
                    }
                    for (k, w) in weights.into_iter().enumerate() {
                        row[g - 1 + k] = (1.0 - fail[g - 1]) * w / total;
                    }
                }
                rows.push(row);
            }
            ComponentSpec {
                id: i + 1,
                pm_cost: rng.random_range(1.0..5.0),
                cm_cost: rng.random_range(10.0..30.0),
                gamma: None,
                transition: TransitionMatrix::from_rows(rows).expect("random rows"),
                state: rng.random_range(1..=m),
            }
        })
        .collect();
    SystemInstance::new(components, setup_cost, m, horizon, 1.0).expect("instance")
}

/// Feasible partition: all failed components plus a random subset of the
/// working ones.
pub fn random_feasible_partition(rng: &mut ChaCha8Rng, instance: &SystemInstance) -> Partition {
    let mut n1 = instance.failed_set();
    for i in 0..instance.len() {
        if !n1.contains(i) && rng.random::<bool>() {
            n1.insert(i);
        }
    }
    Partition::from_maintain_set(n1)
}

/// Independent scenario-enumeration oracle for the two-stage cost: first
/// stage charged directly, second stage summed over all `m^n` joint
/// outcomes with hand-computed node probabilities and the repair-the-failed
/// closed form.
pub fn scenario_enumeration_cost(instance: &SystemInstance, partition: &Partition) -> f64 {
    let n = instance.len();
    let m = instance.state_count();
    let mut cost = 0.0;
    let mut any = false;
    for (i, c) in instance.components().iter().enumerate() {
        if partition.maintains(i) {
            cost += c.pm_cost;
            any = true;
        }
        if c.state == m {
            cost += c.cm_cost - c.pm_cost;
        }
    }
    if any {
        cost += instance.setup_cost();
    }

    // odometer over all joint second-stage outcomes
    let mut outcome = vec![1usize; n];
    loop {
        let mut prob = 1.0;
        for (i, c) in instance.components().iter().enumerate() {
            let from = if partition.maintains(i) { 1 } else { c.state };
            prob *= c.transition.prob(from, outcome[i]);
        }
        if prob > 0.0 {
            let mut stage = 0.0;
            let mut failed = false;
            for (i, c) in instance.components().iter().enumerate() {
                if outcome[i] == m {
                    stage += c.cm_cost;
                    failed = true;
                }
            }
            if failed {
                stage += instance.setup_cost();
            }
            cost += prob * stage;
        }
        // advance
        let mut k = 0;
        loop {
            if k == n {
                return cost;
            }
            outcome[k] += 1;
            if outcome[k] <= m {
                break;
            }
            outcome[k] = 1;
            k += 1;
        }
    }
}

/// Independent per-component cost decomposition of the two-stage objective:
/// standalone totals TC1/TC0 corrected for setup-cost sharing, plus the
/// forced-CM surcharge for components already failed.
pub fn decomposition_cost(instance: &SystemInstance, partition: &Partition) -> f64 {
    let cs = instance.setup_cost();
    let mut total = 0.0;
    let mut n1_count = 0usize;
    let mut q_sum = 0.0;
    let mut survive = 1.0;
    for (i, c) in instance.components().iter().enumerate() {
        let q_new = c.transition.failure_prob(1);
        let q_cur = c.transition.failure_prob(c.state);
        if partition.maintains(i) {
            total += c.pm_cost + cs + q_new * (c.cm_cost + cs);
            n1_count += 1;
            q_sum += q_new;
            survive *= 1.0 - q_new;
        } else {
            total += q_cur * (c.cm_cost + cs);
            q_sum += q_cur;
            survive *= 1.0 - q_cur;
        }
        if c.state == instance.state_count() {
            total += c.cm_cost - c.pm_cost;
        }
    }
    total -= n1_count.saturating_sub(1) as f64 * cs;
    total -= cs * q_sum;
    total += cs * (1.0 - survive);
    total
}

/// Independent multi-stage value by raw recursion over the full scenario
/// tree (no tables, no memoization): at each stage minimize over feasible
/// maintain-sets the stage cost plus the probability-weighted child values.
pub fn scenario_tree_value(instance: &SystemInstance, stage: usize, states: &[usize]) -> f64 {
    let n = instance.len();
    let m = instance.state_count();
    let horizon = instance.horizon();
    let mut failed_cost = 0.0;
    let mut any_failed = false;
    for (i, c) in instance.components().iter().enumerate() {
        if states[i] == m {
            failed_cost += c.cm_cost;
            any_failed = true;
        }
    }
    if stage == horizon {
        return failed_cost
            + if any_failed {
                instance.setup_cost()
            } else {
                0.0
            };
    }

    let working: Vec<usize> = (0..n).filter(|&i| states[i] < m).collect();
    let mut best = f64::INFINITY;
    for pick in 0u32..(1 << working.len()) {
        let mut maintain: Vec<bool> = states.iter().map(|&g| g == m).collect();
        for (bit, &i) in working.iter().enumerate() {
            if pick & (1 << bit) != 0 {
                maintain[i] = true;
            }
        }
        let mut stage_cost = 0.0;
        for (i, c) in instance.components().iter().enumerate() {
            if maintain[i] {
                stage_cost += c.pm_cost;
            }
            if states[i] == m {
                stage_cost += c.cm_cost - c.pm_cost;
            }
        }
        if maintain.iter().any(|&x| x) {
            stage_cost += instance.setup_cost();
        }

        // expectation over all joint children
        let mut expected = 0.0;
        let mut child = vec![1usize; n];
        'outer: loop {
            let mut prob = 1.0;
            for (i, c) in instance.components().iter().enumerate() {
                let from = if maintain[i] { 1 } else { states[i] };
                prob *= c.transition.prob(from, child[i]);
            }
            if prob > 0.0 {
                expected += prob * scenario_tree_value(instance, stage + 1, &child);
            }
            let mut k = 0;
            loop {
                if k == n {
                    break 'outer;
                }
                child[k] += 1;
                if child[k] <= m {
                    break;
                }
                child[k] = 1;
                k += 1;
            }
        }
        let total = stage_cost + expected;
        if total < best {
            best = total;
        }
    }
    best
}
