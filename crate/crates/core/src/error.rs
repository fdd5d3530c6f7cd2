use std::fmt;

/// Errors surfaced by the memory layer, the packed-memory array and the tree store.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("address {index} outside arena {arena} of length {len}")]
    OutOfBounds { arena: usize, index: usize, len: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("degree fault: vertex {vertex} has {degree} children (allowed {min}..={max})")]
    Degree { vertex: usize, degree: usize, min: usize, max: usize },
    #[error("height fault: vertex {vertex} at depth {depth} is a leaf")]
    Height { vertex: usize, depth: usize },
    #[error("navigation fault: rank {rank} out of range at vertex {vertex} with {degree} children")]
    Navigation { vertex: usize, rank: usize, degree: usize },
    #[error("finger {0} is invalid")]
    InvalidFinger(FingerState),
    #[error("finger registry is full (capacity {0})")]
    FingerCapacity(usize),
    #[error("version {requested} is in the future (latest is {latest})")]
    FutureVersion { requested: u64, latest: u64 },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("pointer recalculation aborted: {0}")]
    Recalc(String),
}

/// Why a finger handle cannot be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FingerState {
    Unknown,
    Released,
    /// The addressed vertex was inside a removed subtree.
    Detached,
}

impl fmt::Display for FingerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FingerState::Unknown => f.write_str("unknown"),
            FingerState::Released => f.write_str("released"),
            FingerState::Detached => f.write_str("detached from the tree"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}
