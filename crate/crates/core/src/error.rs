//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, validation, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation
    /// (nonpositive shape/rate, negative increment, zero setup cost, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An instance or decision violates a structural invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A partition does not maintain every failed component.
    #[error("infeasible partition: {0}")]
    Infeasible(String),

    /// A size guard protecting an exponential-time routine was exceeded.
    #[error("size guard exceeded: {0}")]
    Guard(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
