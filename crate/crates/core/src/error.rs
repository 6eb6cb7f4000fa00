use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SieveError {
    #[error("Laguerre degree {degree} exceeds the supported ceiling of {max}")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error(
        "quadrature did not reach tolerance {tolerance:e} (estimate {estimate}, error {error:e})"
    )]
    Accuracy {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("degenerate projection: coefficient norm {0:e} is too small")]
    DegenerateProjection(f64),

    #[error("degenerate normalizer for window {0}")]
    DegenerateNormalizer(f64),

    #[error("invalid observation {id}: {reason}")]
    InvalidObservation { id: String, reason: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate fit: every start stayed on the likelihood floor")]
    DegenerateFit,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl SieveError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SieveError::DivergentIntegral(_)
                | SieveError::Accuracy { .. }
                | SieveError::DegenerateProjection(_)
                | SieveError::DegenerateNormalizer(_)
                | SieveError::DegenerateFit
        )
    }
}

impl From<std::io::Error> for SieveError {
    fn from(e: std::io::Error) -> Self {
        SieveError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for SieveError {
    fn from(e: serde_json::Error) -> Self {
        SieveError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SieveError>;
