use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("field allocation of {requested_bytes} bytes exceeds the limit of {limit_bytes} bytes")]
    Resource { requested_bytes: u64, limit_bytes: u64 },

    #[error("no grid point satisfies the low-weight mass inequality at j = {j}")]
    Unsatisfiable { j: u32 },

    /// The sampled box ended before the structure at level `k` was found.
    #[error("field of radius {radius} exhausted before the circuit needed at level k = {k} was found")]
    InsufficientField { k: i64, radius: u32 },

    #[error("circuit extraction failed: {0}")]
    Extraction(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
