use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("gradient norm {norm} exceeds the Lipschitz bound {bound}")]
    GradientTooLarge { norm: f64, bound: f64 },

    #[error("horizon T={horizon} is invalid: {reason}")]
    InvalidHorizon { horizon: usize, reason: String },

    #[error("invalid interval schedule: {0}")]
    InvalidSchedule(String),

    #[error("round {round} is outside the interval schedule")]
    OutsideSchedule { round: usize },

    #[error("unit-ball learner played a point of norm {norm}")]
    OutsideUnitBall { norm: f64 },

    #[error("switch points must be strictly ascending within [1, T]")]
    UnorderedSwitchPoints,

    #[error("hint solver did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("could not bracket the radial minimizer")]
    Bracketing,

    #[error("inconsistent trace: {0}")]
    InconsistentTrace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            requirement: "finite and positive",
            value,
        })
    }
}

pub(crate) fn nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            requirement: "finite and nonnegative",
            value,
        })
    }
}
