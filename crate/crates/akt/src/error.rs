use std::path::PathBuf;

use crate::torus::Frame;

/// Error variants shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Point or lattice-index dimensions disagree.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// Operands live in incompatible coordinate frames.
    #[error("frame mismatch: expected {expected:?}, got {got:?}")]
    FrameMismatch { expected: Frame, got: Frame },

    /// Equal point counts required.
    #[error("point count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    /// A coordinate violates its frame's range invariant.
    #[error("coordinate {value} outside the {frame:?} range")]
    OutOfRange { value: f64, frame: Frame },

    /// NaN or infinite input where a finite real is required.
    #[error("non-finite input: {0}")]
    NonFinite(f64),

    /// A scalar parameter violates its contract (t <= 0, rho outside (0,1), ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Instance exceeds a documented size limit.
    #[error("instance too large: n = {n} exceeds the limit {limit}")]
    TooLarge { n: usize, limit: usize },

    /// Experiment configuration is malformed.
    #[error("config error: {0}")]
    Config(String),

    /// A theorem-level invariant failed at runtime (treated as a defect).
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// I/O failure with path context.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed CSV input with path context.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects NaN, infinities, zero, and negatives.
pub(crate) fn ensure_positive(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {value}"
        )))
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
