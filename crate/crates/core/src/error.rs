use thiserror::Error;

/// Failures raised by the calculus.
///
/// Validation problems (`InvalidInput`, `DimensionMismatch`) are caller
/// mistakes; the remaining variants are numerical outcomes of valid inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix logarithm undefined: eigenvalue {eigenvalue:e} is not strictly positive")]
    SingularLog { eigenvalue: f64 },

    #[error("{rule}: conditioning on a null event (probability {probability:e})")]
    ConditioningOnNull { rule: &'static str, probability: f64 },

    #[error("{rule}: zero evidence, prior and likelihood ranges do not intersect")]
    ZeroEvidence { rule: &'static str },

    #[error("{rule}: no convergence after {iterations} iterations (last step {residual:e})")]
    NotConverged {
        rule: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for outcomes of valid inputs, false for rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularLog { .. }
                | Error::ConditioningOnNull { .. }
                | Error::ZeroEvidence { .. }
                | Error::NotConverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
