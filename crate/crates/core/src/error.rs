//! Error type shared across the solver stack.

use thiserror::Error;

/// Errors raised while building networks or running simulations.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A pipe references a node id that does not exist.
    #[error("pipe `{pipe}` references unknown node `{node}`")]
    DanglingEndpoint { pipe: String, node: String },

    /// The pipe graph is not connected.
    #[error("heat network is disconnected: node `{node}` is unreachable from `{root}`")]
    DisconnectedGraph { root: String, node: String },

    /// An id was used twice or not found.
    #[error("unknown id `{0}`")]
    UnknownId(String),

    /// Duplicate identifier in the input description.
    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    /// A structural or physical invariant failed during validation.
    #[error("validation failed for `{subject}`: {reason}")]
    Validation { subject: String, reason: String },

    /// Series operands disagree in length or dimension.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The window coefficient matrix could not be factorized.
    #[error("singular coefficient matrix: zero pivot on equation `{equation}`")]
    SingularMatrix { equation: String },

    /// Steady-state Newton iteration failed to converge.
    #[error(
        "steady-state initialization did not converge after {iterations} iterations \
         (max residual {max_residual:e} on equation `{equation}`)"
    )]
    SteadyStateDiverged {
        iterations: usize,
        max_residual: f64,
        equation: String,
    },

    /// Newton solve of the algebraic block failed inside the reference solver.
    #[error("reference solver: algebraic Newton diverged at t={time_s} s, stage {stage} (residual {residual:e})")]
    ReferenceNewtonDiverged { time_s: f64, stage: usize, residual: f64 },

    /// Adaptive window control shrank the step below the configured minimum.
    #[error("time step underflow at t={time_s} s: required dt {dt_s} s is below dt_min (err={err})")]
    StepUnderflow { time_s: f64, dt_s: f64, err: f64 },

    /// Requested series order exceeds the allocated storage.
    #[error("order {requested} exceeds allocated order {allocated}")]
    OrderOverflow { requested: usize, allocated: usize },

    /// Input files or trajectories do not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// Two trajectories cannot be compared sample by sample.
    #[error("misaligned trajectories: {0}")]
    Misaligned(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV parse/serialize failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),

    /// JSON parse failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
