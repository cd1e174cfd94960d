//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands had incompatible shapes.
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("series {id} has no observations")]
    EmptySeries { id: String },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate series id {id}")]
    DuplicateId { id: String },
    #[error("series {id} has no metadata entry")]
    UnknownId { id: String },
    #[error("series {id} not found in {place}")]
    MissingSeries { id: String, place: &'static str },
    #[error("{what} needs at least {needed} observations, got {got}")]
    InsufficientHistory {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("{metric} undefined for series {id}: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        id: String,
        reason: String,
    },
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("model file {path}: {msg}")]
    ModelFormat { path: String, msg: String },
    #[error("unsupported format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checksum mismatch for member {member}")]
    ChecksumMismatch { member: String },
    #[error("ensemble has no trained members")]
    NoMembers,
    #[error("no trained members for frequency {0}")]
    NoMembersForFrequency(String),
    #[error("member horizon {member} does not match target horizon {target} (regime forbids adaptation)")]
    HorizonMismatch { member: usize, target: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
