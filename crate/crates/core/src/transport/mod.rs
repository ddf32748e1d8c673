//! Point-to-point message passing between ranked processing elements.
//!
//! Sends never wait for the receiver; receives block until a frame with the
//! requested `(src, tag)` arrives. Frames that do not match a pending receive
//! are buffered per endpoint, so delivery on a fixed `(src, dst, tag)` channel
//! is FIFO and receives are selective.
//!
//! Send-side buffering is unbounded: a rank that sends faster than its peers
//! receive grows the peers' inboxes without limit.

pub mod sim;
pub mod tcp;
pub mod wire;

use std::fmt;

pub use crate::error::TransportError;
pub use sim::{launch_simulated, DeadlockReport, SimConfig, SimError};
pub use tcp::{connect_tcp, connect_tcp_with_listener, read_hosts, TcpOptions};

pub type Rank = usize;
pub type Tag = u32;

/// The unit of transfer between endpoints.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    pub src: Rank,
    pub dst: Rank,
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("src", &self.src)
            .field("dst", &self.dst)
            .field("tag", &self.tag)
            .field("len", &self.payload.len())
            .finish()
    }
}

/// What an [`Endpoint`] delegates to.
pub trait Backend: Send {
    fn send(&self, frame: Frame) -> Result<(), TransportError>;
    fn receive(&self, src: Rank, tag: Tag) -> Result<Vec<u8>, TransportError>;
}

/// One processing element's handle on the execution: its rank, the world
/// size, and the ability to send and receive.
pub struct Endpoint {
    rank: Rank,
    world_size: usize,
    backend: Box<dyn Backend>,
}

impl Endpoint {
    pub fn new(rank: Rank, world_size: usize, backend: Box<dyn Backend>) -> Self {
        assert!(rank < world_size, "rank {rank} outside world {world_size}");
        Self {
            rank,
            world_size,
            backend,
        }
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn world_size(&self) -> usize {
        self.world_size
    }

    /// Nonblocking send. Returns once the frame is handed to the backend.
    pub fn send(&self, dst: Rank, tag: Tag, payload: Vec<u8>) -> Result<(), TransportError> {
        self.check_rank(dst)?;
        self.backend.send(Frame {
            src: self.rank,
            dst,
            tag,
            payload,
        })
    }

    /// Blocks until a frame from `src` carrying `tag` is available.
    pub fn receive(&self, src: Rank, tag: Tag) -> Result<Vec<u8>, TransportError> {
        self.check_rank(src)?;
        self.backend.receive(src, tag)
    }

    fn check_rank(&self, rank: Rank) -> Result<(), TransportError> {
        if rank < self.world_size {
            Ok(())
        } else {
            Err(TransportError::UnknownRank {
                rank,
                world_size: self.world_size,
            })
        }
    }
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Endpoint")
            .field("rank", &self.rank)
            .field("world_size", &self.world_size)
            .finish_non_exhaustive()
    }
}
