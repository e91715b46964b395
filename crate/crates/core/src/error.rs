use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("chain is reducible: states {unreachable:?} are not mutually reachable with state 0")]
    Reducible { unreachable: Vec<usize> },
    #[error("hypotheses {k} and {j} not Hellinger-separated at state {z}")]
    NotSeparated { k: usize, j: usize, z: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("event {index} has zero probability under every hypothesis")]
    DegenerateEvidence { index: usize },
    #[error("scorer returned a non-positive score at event {index}")]
    ScorerContract { index: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{0}")]
    Undefined(String),
}

pub type Result<T> = core::result::Result<T, Error>;
