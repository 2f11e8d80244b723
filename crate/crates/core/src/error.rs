use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coordinate {coord}: index {index} out of range for {levels} levels")]
    DomainViolation {
        coord: usize,
        index: usize,
        levels: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite {what} at state {state:?}")]
    NonFinite { what: &'static str, state: Vec<usize> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state space of {states} states exceeds the limit of {limit}")]
    Capacity { states: u128, limit: usize },
    #[error("unsupported model: {0}")]
    UnsupportedModel(&'static str),
    #[error("wrong domain: {0}")]
    WrongDomain(&'static str),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
