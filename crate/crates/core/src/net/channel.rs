use serde::{Deserialize, Serialize};

use super::transport::Transport;
use super::wire::{RoundMessage, Tag, Width, MAX_COUNT};
use super::NetError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStats {
    /// Synchronous exchanges among the parties.
    pub comm_rounds: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub frames_sent: u64,
    /// Time spent blocked waiting for frames.
    pub recv_wait: std::time::Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Sent,
    Received,
}

/// One logical message as seen by this node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewEvent {
    pub dir: Direction,
    pub peer: usize,
    pub round: u32,
    pub tag: Tag,
    pub values: Vec<u128>,
}

/// A node's message layer: round stamping, chunking, ordering checks,
/// statistics and an optional transcript.
pub struct Channel {
    transport: Box<dyn Transport>,
    me: usize,
    parties: usize,
    round: u32,
    last_seen: Vec<u32>,
    stats: ChannelStats,
    transcript: Option<Vec<ViewEvent>>,
}

impl Channel {
    pub fn new(transport: Box<dyn Transport>, parties: usize) -> Self {
        let me = transport.me();
        Channel {
            transport,
            me,
            parties,
            round: 0,
            last_seen: vec![0; parties + 1],
            stats: ChannelStats::default(),
            transcript: None,
        }
    }

    pub fn me(&self) -> usize {
        self.me
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    pub fn record_transcript(&mut self) {
        self.transcript.get_or_insert_with(Vec::new);
    }

    pub fn take_transcript(&mut self) -> Vec<ViewEvent> {
        self.transcript.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Advances the round stamp; rounds never go backwards.
    pub fn set_round(&mut self, round: u32) -> Result<(), NetError> {
        if round < self.round {
            return Err(NetError::Protocol(format!(
                "round moved backwards from {} to {round}",
                self.round
            )));
        }
        self.round = round;
        Ok(())
    }

    pub fn send(&mut self, to: usize, tag: Tag, values: &[u128], width: Width) -> Result<(), NetError> {
        let chunks: Vec<&[u128]> = if values.is_empty() {
            vec![values]
        } else {
            values.chunks(MAX_COUNT).collect()
        };
        for chunk in chunks {
            let msg = RoundMessage::new(self.round, tag, chunk, width)?;
            self.stats.bytes_sent += msg.wire_len() as u64;
            self.stats.frames_sent += 1;
            self.transport.send(to, msg.encode())?;
        }
        if let Some(t) = &mut self.transcript {
            t.push(ViewEvent {
                dir: Direction::Sent,
                peer: to,
                round: self.round,
                tag,
                values: values.to_vec(),
            });
        }
        Ok(())
    }

    fn recv_frame(&mut self, from: usize) -> Result<RoundMessage, NetError> {
        let started = std::time::Instant::now();
        let body = self.transport.recv(from);
        self.stats.recv_wait += started.elapsed();
        let body = body?;
        self.stats.bytes_received += (body.len() + super::wire::PREFIX_LEN) as u64;
        let msg = RoundMessage::decode(&body)?;
        let last = self.last_seen.get_mut(from).ok_or(NetError::UnknownPeer(from))?;
        if msg.round < *last {
            return Err(NetError::Protocol(format!(
                "node {from} sent round {} after round {last}",
                msg.round
            )));
        }
        *last = msg.round;
        if msg.tag == Tag::Abort {
            return Err(NetError::Aborted {
                from,
                round: msg.round,
            });
        }
        Ok(msg)
    }

    /// Receives one logical message of exactly `count` elements.
    pub fn recv(&mut self, from: usize, tag: Tag, width: Width, count: usize) -> Result<Vec<u128>, NetError> {
        let mut out = Vec::with_capacity(count);
        loop {
            let msg = self.recv_frame(from)?;
            if msg.tag != tag {
                return Err(NetError::Protocol(format!(
                    "expected {tag} from node {from}, got {}",
                    msg.tag
                )));
            }
            if msg.round != self.round {
                return Err(NetError::Protocol(format!(
                    "node {from} is at round {}, this node at {}",
                    msg.round, self.round
                )));
            }
            out.extend(msg.values(width)?);
            if out.len() > count {
                break;
            }
            if msg.count as usize != MAX_COUNT || out.len() == count {
                break;
            }
        }
        if out.len() != count {
            return Err(NetError::Protocol(format!(
                "{tag} from node {from}: expected {count} elements, got {}",
                out.len()
            )));
        }
        if let Some(t) = &mut self.transcript {
            t.push(ViewEvent {
                dir: Direction::Received,
                peer: from,
                round: self.round,
                tag,
                values: out.clone(),
            });
        }
        Ok(out)
    }

    /// Receives a message whose tag is one of `tags`, with any element count.
    /// Used where the peer decides what comes next (e.g. SYNC vs OBS_SHARE).
    pub fn recv_any(&mut self, from: usize, tags: &[Tag], width: Width) -> Result<(Tag, u32, Vec<u128>), NetError> {
        let msg = self.recv_frame(from)?;
        if !tags.contains(&msg.tag) {
            return Err(NetError::Protocol(format!(
                "unexpected {} from node {from}",
                msg.tag
            )));
        }
        let values = msg.values(width)?;
        if msg.count as usize == MAX_COUNT {
            return Err(NetError::Protocol("open-ended message spans frames".into()));
        }
        if let Some(t) = &mut self.transcript {
            t.push(ViewEvent {
                dir: Direction::Received,
                peer: from,
                round: msg.round,
                tag: msg.tag,
                values: values.clone(),
            });
        }
        Ok((msg.tag, msg.round, values))
    }

    /// One synchronous round among the parties: every message in `msgs` goes
    /// to every other party, then the same messages are collected from each.
    /// Returns `out[p - 1][m]`, party `p`'s values for message `m` (own
    /// values at this node's index).
    pub fn exchange(&mut self, msgs: &[(Tag, Width, &[u128])]) -> Result<Vec<Vec<Vec<u128>>>, NetError> {
        if msgs.is_empty() {
            return Ok(vec![Vec::new(); self.parties]);
        }
        for peer in 1..=self.parties {
            if peer != self.me {
                for (tag, width, values) in msgs {
                    self.send(peer, *tag, values, *width)?;
                }
            }
        }
        let mut out = Vec::with_capacity(self.parties);
        for peer in 1..=self.parties {
            if peer == self.me {
                out.push(msgs.iter().map(|(_, _, v)| v.to_vec()).collect());
            } else {
                let mut got = Vec::with_capacity(msgs.len());
                for (tag, width, values) in msgs {
                    got.push(self.recv(peer, *tag, *width, values.len())?);
                }
                out.push(got);
            }
        }
        self.stats.comm_rounds += 1;
        Ok(out)
    }

    /// Best-effort ABORT to every other node.
    pub fn abort_all(&mut self) {
        for node in 0..=self.parties {
            if node != self.me {
                let msg = RoundMessage::empty(self.round, Tag::Abort);
                let _ = self.transport.send(node, msg.encode());
            }
        }
    }
}
