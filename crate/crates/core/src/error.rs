use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid real specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("digit source holds {available} digits but {needed} were requested")]
    InsufficientPrecision { needed: usize, available: usize },

    #[error("digit source is base {source_base} but base {requested} was requested")]
    BaseMismatch { source_base: u32, requested: u32 },

    #[error("comparison could not be resolved within {cap} digits of refinement")]
    TieUnresolvable { cap: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("enumeration of {needed} candidates exceeds the budget of {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("codec `{0}` failed its round trip")]
    CodecInvalid(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
