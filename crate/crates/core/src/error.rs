use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate document key {0:?}")]
    DuplicateKey(String),

    #[error("empty document key at line {0}")]
    EmptyKey(usize),

    #[error("cluster count {requested} must be in 1..={docs}")]
    ClusterCount { requested: usize, docs: usize },

    #[error("unknown ordering mode {0:?} (expected none, key-order or url-order)")]
    UnknownOrdering(String),

    #[error("cluster assignment: {0}")]
    Assignment(String),

    #[error("invalid scoring input: {0}")]
    ScoringDomain(String),

    #[error("corrupt block at byte {offset}: {reason}")]
    CorruptBlock { offset: usize, reason: &'static str },

    #[error("index format: {0}")]
    Format(String),

    #[error("missing index component {0}")]
    MissingComponent(PathBuf),

    #[error("rbo: {0}")]
    Rbo(&'static str),

    #[error("latency report needs at least one sample")]
    NoSamples,

    #[error("policy: {0}")]
    Policy(String),

    #[error("run file line {line}: {reason}")]
    RunFile { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
