use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a field operation (e.g. inverting zero).
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid channel, ensemble, decoder or experiment parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed code file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// A randomized construction ran out of its retry budget.
    #[error("construction error: {0}")]
    Construction(String),
    /// Numerical breakdown (e.g. a message with no probability mass).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
