use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("level {level} outside the configured range |k| <= {cap}")]
    LevelOutOfRange { level: i64, cap: u32 },

    #[error("{what}: value {value} outside the admissible domain")]
    Domain { what: &'static str, value: f64 },

    #[error("division by zero: divisor pulls back to {pullback}")]
    DivisionByZero { pullback: f64 },

    #[error("logarithm of non-positive pullback {pullback}")]
    LogOfNonPositive { pullback: f64 },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("convex weights must be nonnegative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("non-finite value {value} while evaluating at {at}")]
    NumericDomain { at: f64, value: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error_estimate}")]
    Integration { estimate: f64, error_estimate: f64 },

    #[error("malformed probability tree: {0}")]
    MalformedTree(String),

    #[error("Chebyshev bound not applicable: need at least {min_trials} trials, got {trials}")]
    Applicability { trials: u64, min_trials: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Failures of the numerics rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DivisionByZero { .. }
                | Error::LogOfNonPositive { .. }
                | Error::NumericDomain { .. }
                | Error::Integration { .. }
        )
    }
}

pub(crate) fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: p })
    }
}
