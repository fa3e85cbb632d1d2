use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: estimated error {estimate:e} above tolerance {tolerance:e} \
         after {evaluations} evaluations"
    )]
    NonConvergence {
        estimate: f64,
        tolerance: f64,
        evaluations: usize,
    },

    #[error("no truncation point found for half-line integral below 2^60")]
    TruncationNotFound,

    #[error("cube dimension {dim} exceeds configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("integrand returned non-finite value {value} at {at}")]
    NonFinite { at: f64, value: f64 },

    #[error("operation requires zero shift, model has shift {0}")]
    UnsupportedShift(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures raised by the numerical integration engine.
    pub fn is_quadrature_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::TruncationNotFound
                | Error::NonFinite { .. }
                | Error::DimensionTooLarge { .. }
        )
    }
}
