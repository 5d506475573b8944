//! Frame layout of one `RoundMessage`:
//!
//! ```text
//! u32 LE  body length (excluded from itself)
//! u32 LE  round
//! u8      tag
//! u16 LE  element count
//! count * width octets, big-endian elements
//! ```
//!
//! The element width is not on the wire; both ends derive it from the session.

use std::fmt;

use super::NetError;

pub const HEADER_LEN: usize = 7;
pub const PREFIX_LEN: usize = 4;
/// Largest element count a single frame can carry.
pub const MAX_COUNT: usize = u16::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[repr(u8)]
pub enum Tag {
    ObsShare = 1,
    MaskedOpen = 2,
    FlagShare = 3,
    Sync = 4,
    Abort = 5,
}

impl Tag {
    pub fn from_u8(b: u8) -> Result<Tag, NetError> {
        Ok(match b {
            1 => Tag::ObsShare,
            2 => Tag::MaskedOpen,
            3 => Tag::FlagShare,
            4 => Tag::Sync,
            5 => Tag::Abort,
            other => return Err(NetError::Malformed(format!("unknown tag {other:#04x}"))),
        })
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::ObsShare => "OBS_SHARE",
            Tag::MaskedOpen => "MASKED_OPEN",
            Tag::FlagShare => "FLAG_SHARE",
            Tag::Sync => "SYNC",
            Tag::Abort => "ABORT",
        })
    }
}

/// Octets per element for a payload kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Width(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundMessage {
    pub round: u32,
    pub tag: Tag,
    pub count: u16,
    /// Encoded elements, `count * width` octets.
    pub payload: Vec<u8>,
}

impl RoundMessage {
    pub fn new(round: u32, tag: Tag, values: &[u128], width: Width) -> Result<Self, NetError> {
        if values.len() > MAX_COUNT {
            return Err(NetError::Malformed(format!(
                "{} elements exceed one frame",
                values.len()
            )));
        }
        let mut payload = Vec::with_capacity(values.len() * width.0);
        for v in values {
            let bytes = v.to_be_bytes();
            if width.0 < 16 && v >> (8 * width.0) != 0 {
                return Err(NetError::Malformed(format!("{v} does not fit {} octets", width.0)));
            }
            payload.extend_from_slice(&bytes[16 - width.0..]);
        }
        Ok(RoundMessage {
            round,
            tag,
            count: values.len() as u16,
            payload,
        })
    }

    pub fn empty(round: u32, tag: Tag) -> Self {
        RoundMessage {
            round,
            tag,
            count: 0,
            payload: Vec::new(),
        }
    }

    /// Body without the length prefix.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.push(self.tag as u8);
        out.extend_from_slice(&self.count.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(body: &[u8]) -> Result<Self, NetError> {
        if body.len() < HEADER_LEN {
            return Err(NetError::Malformed(format!("frame of {} octets", body.len())));
        }
        let round = u32::from_le_bytes(body[0..4].try_into().expect("4 octets"));
        let tag = Tag::from_u8(body[4])?;
        let count = u16::from_le_bytes(body[5..7].try_into().expect("2 octets"));
        Ok(RoundMessage {
            round,
            tag,
            count,
            payload: body[HEADER_LEN..].to_vec(),
        })
    }

    /// Octets on the wire including the length prefix.
    pub fn wire_len(&self) -> usize {
        PREFIX_LEN + HEADER_LEN + self.payload.len()
    }

    pub fn values(&self, width: Width) -> Result<Vec<u128>, NetError> {
        let expected = self.count as usize * width.0;
        if self.payload.len() != expected {
            return Err(NetError::Malformed(format!(
                "{} count {} at width {} needs {expected} octets, got {}",
                self.tag,
                self.count,
                width.0,
                self.payload.len()
            )));
        }
        Ok(self
            .payload
            .chunks_exact(width.0.max(1))
            .take(self.count as usize)
            .map(|c| {
                let mut buf = [0u8; 16];
                buf[16 - c.len()..].copy_from_slice(c);
                u128::from_be_bytes(buf)
            })
            .collect())
    }
}

/// Length-prefixed frame for stream transports.
pub fn prefixed(body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(PREFIX_LEN + body.len());
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(body);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let m = RoundMessage::new(0x0102_0304, Tag::MaskedOpen, &[1, 0x0203], Width(2)).unwrap();
        let body = m.encode();
        assert_eq!(body, vec![4, 3, 2, 1, 2, 2, 0, 0, 1, 2, 3]);
        assert_eq!(prefixed(&body)[..4], [11, 0, 0, 0]);
        assert_eq!(m.wire_len(), 15);
    }

    #[test]
    fn rejects_bad_frames() {
        assert!(RoundMessage::decode(&[0, 0, 0]).is_err());
        assert!(RoundMessage::decode(&[0, 0, 0, 0, 9, 0, 0]).is_err());
        let mut body = RoundMessage::new(1, Tag::ObsShare, &[5, 6], Width(1)).unwrap().encode();
        body.pop();
        let m = RoundMessage::decode(&body).unwrap();
        assert!(m.values(Width(1)).is_err());
        assert!(RoundMessage::new(1, Tag::ObsShare, &[256], Width(1)).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(round in any::<u32>(), tag in 1u8..=5, width in 1usize..=16,
                      raw in proptest::collection::vec(any::<u128>(), 0..50)) {
            let vals: Vec<u128> = raw.iter()
                .map(|v| if width == 16 { *v } else { v & ((1u128 << (8 * width)) - 1) })
                .collect();
            let m = RoundMessage::new(round, Tag::from_u8(tag).unwrap(), &vals, Width(width)).unwrap();
            let back = RoundMessage::decode(&m.encode()).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(back.values(Width(width)).unwrap(), vals);
        }
    }
}
