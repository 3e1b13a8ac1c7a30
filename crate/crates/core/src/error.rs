use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// An argument lies outside the domain of an operation (for example `ξ = 0`
    /// for the phase function).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of an input value does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A parameter is out of its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Two values that must live on the same lattice do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A support specification selects no lattice cell.
    #[error("infeasible support: {0}")]
    Infeasible(String),

    /// Sampled inputs do not satisfy the hypothesis of the estimate being probed.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// An operation is not defined for the requested variant.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A time integration produced non-finite values or runaway growth.
    #[error("numerical divergence: {0}")]
    Divergence(String),
}

impl LabError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LabError::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
