use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("graph needs at least two nodes, got {0}")]
    TooFewNodes(usize),

    #[error("{workers} workers do not divide {nodes} nodes (nearest valid worker counts: {below:?} / {above:?})")]
    IndivisibleWorkers {
        nodes: usize,
        workers: usize,
        below: Option<usize>,
        above: Option<usize>,
    },

    #[error("invalid worker count {workers} for {nodes} nodes")]
    InvalidWorkers { nodes: usize, workers: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("label {label} out of range for {k} communities")]
    LabelOutOfRange { label: u32, k: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    Undefined(&'static str),

    #[error("codec error: {0}")]
    Codec(#[from] crate::protocol::CodecError),

    #[error("protocol error: {0}")]
    Protocol(String),
}
