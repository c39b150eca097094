//! Solvers for the two-stage and multi-stage maintenance problems.
//!
//! - [`brute_force_two_stage`]: exhaustive partition enumeration (oracle).
//! - [`solve_two_stage`]: exact two-stage solver driven by the Δr/Δs move criteria.
//! - [`heuristic_two_stage`]: cardinality-capped heuristic with randomized completion.
//! - [`exact_multistage`]: backward induction over the full joint state space.
//! - [`rolling_horizon_step`] / [`simulate_rolling_horizon`]: multi-stage
//!   approximation that re-solves the two-stage problem at every stage.

mod multistage;
mod rolling;
mod two_stage;

pub use multistage::{exact_multistage, MultistageSolution, PolicyTable};
pub use rolling::{rolling_horizon_step, simulate_rolling_horizon, SimulationSummary};
pub use two_stage::{
    brute_force_two_stage, heuristic_two_stage, solve_two_stage, BatchRecord, HeuristicConfig,
    MoveDestination, MoveRecord, SearchTrace,
};
