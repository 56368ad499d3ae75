//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A dense validation utility was asked for a matrix larger than it is
    /// meant to handle.
    #[error("unsupported size: {what} requires n <= {limit}, got {n}")]
    UnsupportedSize {
        what: &'static str,
        limit: usize,
        n: usize,
    },

    /// The implicit step's fixed-point iteration ran out of its iteration
    /// budget before meeting the tolerance.
    #[error("fixed-point iteration did not converge within {max_inner} iterations (last update {last_update:.3e}, tol {tol:.3e})")]
    Nonconvergence {
        max_inner: usize,
        last_update: f64,
        tol: f64,
    },

    /// An iterate reached the singular level `u = 1` to working precision;
    /// the run is over (numerical quenching).
    #[error("singularity contact: component {index} reached {value} at step {step}")]
    SingularityContact {
        step: usize,
        index: usize,
        value: f64,
    },

    /// A structure monitor (positivity, monotonicity, sub-unity bound, step
    /// decay, or defect size) failed beyond the clamping tolerance.
    #[error("structure violation at step {step}: {what}")]
    StructureViolation { step: usize, what: String },

    /// The explicit reference integrator left the physically meaningful
    /// state region without triggering the quench detector.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// Both bracket endpoints of the critical half-width search classified
    /// the same way, so there is nothing to bisect.
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    /// A run finished its budget without either quenching or stagnating, so
    /// the bisection cannot classify it.
    #[error("inconclusive run at a = {a}: neither quench nor steady state within budget")]
    Inconclusive { a: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
