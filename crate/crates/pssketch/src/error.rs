use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A trace file line could not be parsed.
    #[error("trace parse error at line {line}: {reason}")]
    TraceParse { line: usize, reason: String },

    /// An operation that needs at least one packet was given none.
    #[error("empty trace")]
    EmptyTrace,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Cross-layer bookkeeping broke an internal invariant. Reaching this is
    /// a bug, never a data-dependent condition.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
