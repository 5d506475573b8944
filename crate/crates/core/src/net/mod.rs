//! Message layer shared by the monitor parties and the System.

pub mod channel;
pub mod transport;
pub mod wire;

pub use channel::{Channel, ChannelStats, Direction, ViewEvent};
pub use transport::{InProcess, Tcp, Transport};
pub use wire::{RoundMessage, Tag, Width};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("node {0} disconnected")]
    Disconnected(usize),
    #[error("no link to node {0}")]
    UnknownPeer(usize),
    #[error("timed out waiting for node {0}")]
    Timeout(usize),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("node {from} aborted in round {round}")]
    Aborted { from: usize, round: u32 },
}
