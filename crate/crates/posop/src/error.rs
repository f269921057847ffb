use thiserror::Error;

/// Errors produced by the numeric kernels and operator evaluations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation
    /// (point outside the operator interval, invalid family parameters,
    /// index beyond a finite support, branch ambiguity of a power).
    #[error("domain error: {0}")]
    Domain(String),

    /// A series did not satisfy its tail criterion within `max_terms`.
    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: u64 },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error(
        "quadrature tolerance not met after {subdivisions} subdivisions \
         (error estimate {error_estimate:e})"
    )]
    ToleranceNotMet {
        subdivisions: usize,
        error_estimate: f64,
    },

    /// A user-supplied function returned a non-finite value or one with
    /// magnitude above the boundedness guard.
    #[error("function guard violated at t = {at}: value {value}")]
    GuardViolation { at: f64, value: f64 },

    /// An experiment was asked to do something its mode forbids
    /// (e.g. a general-function probe for a characteristic-function-only
    /// experiment).
    #[error("probe mode mismatch: {0}")]
    ModeMismatch(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
