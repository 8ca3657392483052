use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation.
    #[error("invalid config `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    /// An operation received an argument outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A sample batch is too short for the requested operation.
    #[error("batch too short: need {needed} samples, have {have}")]
    BatchTooShort { needed: usize, have: usize },

    /// The exhaustive search was asked to evaluate a plan beyond the
    /// desk-scale guard without an explicit override.
    #[error("search plan spans {delta_t} s (> {limit} s); pass the resource-guard override to proceed")]
    ResourceGuard { delta_t: f64, limit: f64 },

    #[error("estimation failure: {0}")]
    Estimation(String),

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
