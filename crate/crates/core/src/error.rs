use std::time::Duration;

use crate::transport::{Rank, Tag};

/// Failures raised by a transport backend.
#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("rank {rank} is outside the world of size {world_size}")]
    UnknownRank { rank: Rank, world_size: usize },

    #[error("endpoint is closed")]
    Closed,

    #[error("starved receive: no frame from rank {src} with tag {tag} will ever arrive")]
    Starved { src: Rank, tag: Tag },

    #[error("receive from rank {src} with tag {tag} timed out after {after:?}")]
    Timeout { src: Rank, tag: Tag, after: Duration },

    #[error("cannot reach rank {rank} at {addr}: {source}")]
    Unreachable {
        rank: Rank,
        addr: String,
        #[source]
        source: std::io::Error,
    },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("payload truncated: needed {needed} more bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("invalid utf-8 in string payload")]
    Utf8,
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("{0} trailing bytes after value")]
    Trailing(usize),
}

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Transport(#[from] TransportError),

    #[error("cannot decode message payload: {0}")]
    Decode(#[from] DecodeError),

    #[error("duplicate rank {0} in group member list")]
    DuplicateRank(Rank),

    #[error("rank {rank} is outside the world of size {world_size}")]
    RankOutOfRange { rank: Rank, world_size: usize },

    #[error("local index {index} is outside the group of size {size}")]
    LocalIndexOutOfRange { index: usize, size: usize },

    #[error("broadcast without payload")]
    BroadcastWithoutPayload,

    #[error("operator `{0}` is not declared commutative")]
    NonCommutative(String),

    #[error("reduction over an empty sequence has no value")]
    EmptySequence,

    #[error("sequence index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("insufficient processing elements: need {needed}, have {available}")]
    InsufficientProcessingElements { needed: usize, available: usize },

    #[error("invalid index mapping: {0}")]
    InvalidMapping(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("coordinate {coord} out of range for axis {axis} of extent {extent}")]
    CoordinateOutOfRange {
        axis: usize,
        coord: usize,
        extent: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown communication pattern `{0}`")]
    UnknownPattern(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse input: {0}")]
    Parse(String),

    #[error(transparent)]
    Sim(#[from] crate::transport::sim::SimError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
