//! Condition-based maintenance planning for multi-component systems with
//! economic dependence.
//!
//! A system of components degrades stochastically (gamma processes, possibly
//! with random effects) over a finite horizon of periodic inspections. Every
//! maintenance visit incurs a shared setup cost on top of per-component PM
//! or CM charges, which makes grouping repairs worthwhile. This crate
//! provides:
//!
//! - [`degradation`]: discretization of gamma-process wear into per-component
//!   state transition matrices;
//! - [`model`]: the system instance, two-stage cost function, and JSON
//!   instance files;
//! - [`structural`]: the standalone PM thresholds and the Δr/Δs move
//!   criteria that certify cost-improving regroupings;
//! - [`solvers`]: an exact two-stage solver built on the move criteria, a
//!   cardinality-capped heuristic, brute-force oracles, an exact multi-stage
//!   backward induction, and a rolling-horizon simulator;
//! - [`milp`]: an exact linearization of the two-stage model and a CPLEX-LP
//!   text exporter;
//! - [`bench`]: reproducible random-instance generation and experiment
//!   harnesses.

pub mod bench;
pub mod degradation;
pub mod error;
pub mod milp;
pub mod model;
pub mod plan;
pub mod set;
pub mod solvers;
pub mod structural;

pub use degradation::{
    compound_gamma_increment_cdf, gamma_increment_cdf, GammaProcessParams, RateModel, StateGrid,
    TransitionMatrix,
};
pub use error::{Error, Result};
pub use model::{ComponentSpec, Finding, Partition, Severity, StageDecision, SystemInstance};
pub use plan::{Action, MaintenancePlan, StageRecord};
pub use set::ComponentSet;
pub use solvers::{
    brute_force_two_stage, exact_multistage, heuristic_two_stage, rolling_horizon_step,
    simulate_rolling_horizon, solve_two_stage, HeuristicConfig, MultistageSolution, SearchTrace,
    SimulationSummary,
};
pub use structural::{
    delta_r, delta_s, prop1_shortcut, r_value, rho, s_value, standalone_decision, survival_prob,
    MoveEvaluation, StandaloneDecision,
};
