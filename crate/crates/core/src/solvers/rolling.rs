//! Rolling-horizon approximation of the multi-stage problem.
//!
//! At every stage before the last, the two-stage problem anchored at the
//! currently observed states is solved heuristically and only its
//! first-stage decision is kept; the last stage applies the closed-form
//! repair-the-failed policy. The Monte Carlo simulator replays this policy
//! over sampled degradation paths.
//!
//! Reproducibility: the simulator uses a ChaCha8 generator keyed by the
//! caller's seed, with the stream id set to the replication index, so
//! replications draw from independent, platform-stable streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StageDecision, SystemInstance};
use crate::plan::{MaintenancePlan, StageRecord};
use crate::solvers::two_stage::{heuristic_two_stage, HeuristicConfig};

/// One rolling-horizon step: solve the two-stage problem at the observed
/// states and return its first-stage decision (corrective on failed,
/// preventive on the rest of the chosen maintenance set).
pub fn rolling_horizon_step(
    instance: &SystemInstance,
    states: &[usize],
    config: &HeuristicConfig,
) -> Result<StageDecision> {
    let current = instance.with_states(states)?;
    let (partition, _) = heuristic_two_stage(&current, config)?;
    Ok(partition.to_decision(&current))
}

/// Monte Carlo estimate of the rolling-horizon policy cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub mean_cost: f64,
    /// Sample standard deviation (n-1 denominator); 0 for one replication.
    pub std_dev: f64,
    pub replications: usize,
    /// Full trace of the first replication.
    pub sample_plan: MaintenancePlan,
}

impl SimulationSummary {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.replications as f64).sqrt()
    }
}

/// Simulate the rolling-horizon policy over the instance's horizon.
///
/// Each replication starts from the instance's observed states, applies
/// [`rolling_horizon_step`] at stages `1..T`, samples the next joint state
/// from the per-component transition rows (reset rows for maintained
/// components), and closes with the last-stage policy. Deterministic given
/// `seed`.
pub fn simulate_rolling_horizon(
    instance: &SystemInstance,
    replications: usize,
    seed: u64,
    config: &HeuristicConfig,
) -> Result<SimulationSummary> {
    if replications == 0 {
        return Err(Error::Invalid("need at least one replication".into()));
    }
    let horizon = instance.horizon();
    let n = instance.len();
    let mut costs = Vec::with_capacity(replications);
    let mut sample_plan = None;

    for rep in 0..replications {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let mut states = instance.states();
        let mut records = Vec::with_capacity(horizon);
        let mut total = 0.0;

        for stage in 1..horizon {
            let decision = rolling_horizon_step(instance, &states, config)?;
            let cost = decision.stage_cost(instance);
            total += cost;
            let mut next = vec![0usize; n];
            for (i, slot) in next.iter_mut().enumerate() {
                let from = if decision.maintain[i] { 1 } else { states[i] };
                let row = instance.component(i).transition.row(from);
                *slot = sample_state(row, rng.random::<f64>());
            }
            records.push(StageRecord {
                stage,
                states: std::mem::replace(&mut states, next),
                decision,
                cost,
            });
        }

        let decision = instance.second_stage_policy(&states);
        let cost = decision.stage_cost(instance);
        total += cost;
        records.push(StageRecord {
            stage: horizon,
            states: states.clone(),
            decision,
            cost,
        });

        if rep == 0 {
            sample_plan = Some(MaintenancePlan::new(records));
        }
        costs.push(total);
    }

    let mean = costs.iter().sum::<f64>() / replications as f64;
    let std_dev = if replications > 1 {
        let ss: f64 = costs.iter().map(|c| (c - mean) * (c - mean)).sum();
        (ss / (replications - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimulationSummary {
        mean_cost: mean,
        std_dev,
        replications,
        sample_plan: sample_plan.expect("at least one replication"),
    })
}

/// Inverse-CDF draw from a transition row; returns a 1-based state.
fn sample_state(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (g, &q) in row.iter().enumerate() {
        acc += q;
        if u < acc {
            return g + 1;
        }
    }
    row.len()
}
