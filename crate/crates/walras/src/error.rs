//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong while building problems, evaluating maps or
/// running the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A point was handed to an evaluator outside the problem's domain.
    #[error("coordinate {index} = {value} violates the domain guard")]
    DomainViolation { index: usize, value: f64 },

    /// A function evaluation produced NaN or infinity.
    #[error("non-finite value at component {index} during evaluation")]
    NonFinite { index: usize },

    /// Income `p.w` of a consumer is not strictly positive.
    #[error("consumer income is not strictly positive at the given prices")]
    NonPositiveIncome,

    /// A matrix required to be (numerically) full rank was not.
    #[error("jacobian is singular or rank-deficient")]
    SingularJacobian,

    /// The Newton corrector gave up on the current predicted point.
    #[error("corrector failed: {0}")]
    CorrectorFailure(&'static str),

    /// The path tracer never reached the target even after restarts.
    #[error("no convergence after {attempts} attempt(s); best complementarity residual {best_residual:.3e}")]
    NoConvergence { attempts: usize, best_residual: f64 },

    /// A solver configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed caller input (dimension mismatches, nonpositive starts, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model file failed structural validation; the message carries the
    /// offending field path.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
