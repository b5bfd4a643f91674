use thiserror::Error;

/// Errors raised by configuration checks and numeric preconditions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is missing, out of range or inconsistent.
    /// `field` names the offending key so front ends can report it.
    #[error("invalid `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    Input(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Field name for configuration errors, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Config { field, .. } => Some(field),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
