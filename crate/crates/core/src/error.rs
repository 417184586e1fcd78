use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sieve limit {requested} exceeds the configured maximum {max}")]
    SieveLimit { requested: u64, max: u64 },

    #[error("{what} = {value} exceeds the sieve limit {limit}")]
    BeyondSieve {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("exact mode is limited to n <= {max}, got {n}")]
    ExactModeLimit { n: usize, max: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
