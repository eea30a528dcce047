use thiserror::Error;

/// Errors raised by the numerical routines and the spec parsers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QlabError {
    /// A function or field description is malformed. `field` points at the
    /// offending entry (e.g. `params.alpha`, `knots[2]`).
    #[error("invalid spec at `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A lower integration limit violates the admissibility restriction of a condition.
    #[error("inadmissible lower limit {value} for {condition}: {reason}")]
    LowerLimit {
        condition: String,
        value: f64,
        reason: String,
    },

    /// Bisection could not bracket a sign change.
    #[error("bracket failure: {0}")]
    Bracket(String),

    /// The extremal construction rejected its input function.
    #[error("rejected phi: {0}")]
    Rejected(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl QlabError {
    pub fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        QlabError::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, QlabError>;
