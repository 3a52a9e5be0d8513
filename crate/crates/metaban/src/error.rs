//! Crate-wide error type.

use crate::UserId;
use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("user {0} missing from {1}")]
    MissingUser(UserId, &'static str),

    #[error("user {0} has no observations; warm start incomplete")]
    WarmStartIncomplete(UserId),

    #[error("occurrence count is zero; warm start incomplete")]
    ZeroOccurrenceCount,

    #[error("no pending decision for this round")]
    NoPendingDecision,

    #[error("decision already consumed this round")]
    DecisionAlreadyConsumed,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
