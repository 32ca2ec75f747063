//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A dual vector failed the subgradient membership check: the mirror map
    /// does not send it back to its primal point.
    #[error("inconsistent dual: |mirror(dual) - primal| = {mismatch:.3e} exceeds {tolerance:.0e}")]
    InconsistentDual { mismatch: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested problem instance has no saddle point (inconsistent
    /// stationarity system).
    #[error("no saddle point: {0}")]
    NoSaddlePoint(String),

    /// A step-size sequence violates the feasibility conditions of the method.
    #[error("schedule violation at k={k}: {condition}")]
    ScheduleViolation { k: usize, condition: String },

    /// Non-finite values appeared in the iteration.
    #[error("numerical breakdown at iteration {k}: non-finite values")]
    NumericalBreakdown { k: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
