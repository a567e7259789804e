use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// |c|·‖f‖∞ exceeds min(|M|, 1/m); the GPP representation of the
    /// exceedance probability is no longer exact.
    #[error(
        "threshold |c|·‖f‖∞ = {scaled} exceeds the validity bound min(|M|, 1/m) = {bound} \
         (M = {cutoff}, m = {bound_m})"
    )]
    ThresholdTooLarge {
        scaled: f64,
        bound: f64,
        cutoff: f64,
        bound_m: f64,
    },

    #[error("unbounded generator ratio: {0}")]
    UnboundedRatio(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
