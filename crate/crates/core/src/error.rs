use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation requires.
    #[error("domain violation for `{arg}`: {reason}")]
    Domain { arg: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// The Legendre function lacks a capability (e.g. forward projections).
    #[error("capability missing: {0}")]
    Capability(String),

    /// A hypothesis of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no point of the affine subspace lies in the interior of dom f")]
    InfeasibleDomain,

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("cross-check failed: routes disagree by {distance:e}")]
    CrossCheck { distance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(arg: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            arg,
            reason: reason.into(),
        }
    }
}
