//! Maintenance plan traces: per-stage states, actions, and costs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{StageDecision, SystemInstance};

/// Action applied to one component at one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    None,
    Pm,
    Cm,
}

impl Action {
    pub fn label(self) -> &'static str {
        match self {
            Action::None => "none",
            Action::Pm => "pm",
            Action::Cm => "cm",
        }
    }

    /// Derive the action from decision flags.
    pub fn from_flags(maintain: bool, corrective: bool) -> Self {
        match (maintain, corrective) {
            (_, true) => Action::Cm,
            (true, false) => Action::Pm,
            (false, false) => Action::None,
        }
    }
}

/// One stage of a realized plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    /// 1-based stage index.
    pub stage: usize,
    /// Observed states before the decision.
    pub states: Vec<usize>,
    pub decision: StageDecision,
    pub cost: f64,
}

/// A per-stage action trace with realized states and costs (undiscounted).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaintenancePlan {
    pub stages: Vec<StageRecord>,
    pub total_cost: f64,
}

impl MaintenancePlan {
    pub fn new(stages: Vec<StageRecord>) -> Self {
        let total_cost = stages.iter().map(|s| s.cost).sum();
        Self { stages, total_cost }
    }

    /// Action of component `i` (0-based) at a stage record.
    pub fn action(record: &StageRecord, i: usize) -> Action {
        Action::from_flags(record.decision.maintain[i], record.decision.corrective[i])
    }

    /// CSV rendering, one row per (stage, component):
    /// `stage,component,state,action,setup_flag,stage_cost`.
    pub fn to_csv(&self, instance: &SystemInstance) -> String {
        let mut out = String::from("stage,component,state,action,setup_flag,stage_cost\n");
        for record in &self.stages {
            for (i, c) in instance.components().iter().enumerate() {
                let action = Self::action(record, i);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    record.stage,
                    c.id,
                    record.states[i],
                    action.label(),
                    record.decision.setup as u8,
                    record.cost
                );
            }
        }
        out
    }
}
