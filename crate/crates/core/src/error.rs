//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical argument is outside the range where the operation is
    /// defined (e.g. an elliptic parameter m >= 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent configuration (mode/target mismatch, bad grid, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A propagation was requested past the end of the stored field.
    #[error("requested time {requested} exceeds field duration {duration}")]
    OutOfRange { requested: f64, duration: f64 },

    /// The transverse adjoint norm r collapsed and the flow has no valid
    /// switching interpretation.
    #[error("singular flow: r fell below {threshold:e} at t = {t}")]
    SingularFlow { t: f64, threshold: f64 },

    /// A text artifact (pulse/profile CSV) could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A global search finished without any robust solution.
    #[error("no robust solution found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
