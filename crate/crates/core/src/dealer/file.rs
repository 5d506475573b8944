//! Binary material file holding one party's share of preprocessing.
//!
//! ```text
//! "PMMAT\x01"                  magic and version
//! u32 LE party, u32 LE parties
//! u8 scheme (0 additive, 1 shamir), u32 LE threshold
//! u16 LE length + UTF-8        modulus ("pow2:64", "prime:...")
//! u64 LE triples, bit_triples, dabits
//! u32 LE number of edaBit kinds, then per kind:
//!     u8 (0 masked, 1 field), u32 LE width, u64 LE count
//! items in the order above, each a u64 LE id followed by its elements;
//! arithmetic elements use the session encoding, bits one octet each
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{
    BitTripleShare, DaBitShare, DealerError, EdaBitShare, EdaKind, MaterialBatch, TripleShare,
};
use crate::algebra::Modulus;
use crate::sharing::SchemeId;

const MAGIC: &[u8; 6] = b"PMMAT\x01";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaterialHeader {
    pub party: usize,
    pub scheme: SchemeId,
}

fn err<E: std::fmt::Display>(e: E) -> DealerError {
    DealerError::File(e.to_string())
}

pub fn write_material<W: Write>(
    mut out: W,
    header: &MaterialHeader,
    batch: &MaterialBatch,
) -> Result<(), DealerError> {
    let m = header.scheme.modulus();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header.party as u32).to_le_bytes());
    buf.extend_from_slice(&(header.scheme.parties() as u32).to_le_bytes());
    let (tag, t) = match header.scheme {
        SchemeId::AdditiveRing { .. } => (0u8, 0u32),
        SchemeId::Shamir { threshold, .. } => (1, threshold as u32),
        SchemeId::BooleanXor { .. } => return Err(DealerError::NotArithmetic(header.scheme)),
    };
    buf.push(tag);
    buf.extend_from_slice(&t.to_le_bytes());
    let ms = m.to_string();
    buf.extend_from_slice(&(ms.len() as u16).to_le_bytes());
    buf.extend_from_slice(ms.as_bytes());
    let c = batch.counts();
    for n in [c.triples, c.bit_triples, c.dabits] {
        buf.extend_from_slice(&n.to_le_bytes());
    }
    buf.extend_from_slice(&(c.edabits.len() as u32).to_le_bytes());
    for (kind, n) in &c.edabits {
        let (kt, w) = match kind {
            EdaKind::Masked { width } => (0u8, *width),
            EdaKind::Field => (1, 0),
        };
        buf.push(kt);
        buf.extend_from_slice(&w.to_le_bytes());
        buf.extend_from_slice(&n.to_le_bytes());
    }
    for t in &batch.triples {
        buf.extend_from_slice(&t.id.to_le_bytes());
        for v in [t.a, t.b, t.c] {
            m.encode_into(v, &mut buf);
        }
    }
    for t in &batch.bit_triples {
        buf.extend_from_slice(&t.id.to_le_bytes());
        buf.extend_from_slice(&[t.a as u8, t.b as u8, t.c as u8]);
    }
    for d in &batch.dabits {
        buf.extend_from_slice(&d.id.to_le_bytes());
        m.encode_into(d.arith, &mut buf);
        buf.push(d.bit as u8);
    }
    for (kind, items) in &batch.edabits {
        for e in items {
            if e.bits.len() != kind.bits(m) as usize {
                return Err(err(format!("{kind} item {} has {} bits", e.id, e.bits.len())));
            }
            buf.extend_from_slice(&e.id.to_le_bytes());
            m.encode_into(e.arith, &mut buf);
            m.encode_into(e.high, &mut buf);
            buf.extend(e.bits.iter().map(|&b| b as u8));
        }
    }
    out.write_all(&buf).map_err(err)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DealerError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| err("truncated file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, DealerError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, DealerError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 octets")))
    }
    fn u32(&mut self) -> Result<u32, DealerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 octets")))
    }
    fn u64(&mut self) -> Result<u64, DealerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 octets")))
    }
    fn bit(&mut self) -> Result<bool, DealerError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(err(format!("bit octet {b}"))),
        }
    }
    fn elem(&mut self, m: &Modulus) -> Result<u128, DealerError> {
        m.decode(self.take(m.byte_width())?).map_err(err)
    }
}

pub fn read_material<R: Read>(mut input: R) -> Result<(MaterialHeader, MaterialBatch), DealerError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf).map_err(err)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(MAGIC.len())? != MAGIC {
        return Err(err("bad magic"));
    }
    let party = c.u32()? as usize;
    let parties = c.u32()? as usize;
    let tag = c.u8()?;
    let t = c.u32()? as usize;
    let len = c.u16()? as usize;
    let ms = std::str::from_utf8(c.take(len)?).map_err(err)?;
    let m: Modulus = ms.parse().map_err(err)?;
    let scheme = match tag {
        0 => SchemeId::additive(m, parties)?,
        1 => SchemeId::shamir(m, t, parties)?,
        other => return Err(err(format!("scheme tag {other}"))),
    };
    if party == 0 || party > parties {
        return Err(err(format!("party {party} of {parties}")));
    }
    let (nt, nb, nd) = (c.u64()?, c.u64()?, c.u64()?);
    let kinds = c.u32()?;
    let mut eda = Vec::new();
    for _ in 0..kinds {
        let kind = match (c.u8()?, c.u32()?) {
            (0, width) => EdaKind::Masked { width },
            (1, _) => EdaKind::Field,
            (other, _) => return Err(err(format!("edaBit kind tag {other}"))),
        };
        kind.check(m)?;
        eda.push((kind, c.u64()?));
    }
    let mut batch = MaterialBatch::default();
    for _ in 0..nt {
        batch.triples.push(TripleShare {
            id: c.u64()?,
            a: c.elem(&m)?,
            b: c.elem(&m)?,
            c: c.elem(&m)?,
        });
    }
    for _ in 0..nb {
        batch.bit_triples.push(BitTripleShare {
            id: c.u64()?,
            a: c.bit()?,
            b: c.bit()?,
            c: c.bit()?,
        });
    }
    for _ in 0..nd {
        batch.dabits.push(DaBitShare {
            id: c.u64()?,
            arith: c.elem(&m)?,
            bit: c.bit()?,
        });
    }
    let mut edabits = BTreeMap::new();
    for (kind, n) in eda {
        let mut items = Vec::new();
        for _ in 0..n {
            let id = c.u64()?;
            let arith = c.elem(&m)?;
            let high = c.elem(&m)?;
            let bits = (0..kind.bits(m)).map(|_| c.bit()).collect::<Result<_, _>>()?;
            items.push(EdaBitShare {
                id,
                arith,
                bits,
                high,
            });
        }
        edabits.insert(kind, items);
    }
    batch.edabits = edabits;
    if c.pos != buf.len() {
        return Err(err(format!("{} trailing octets", buf.len() - c.pos)));
    }
    Ok((MaterialHeader { party, scheme }, batch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dealer::{Dealer, Demand};

    #[test]
    fn round_trip() {
        for scheme in [
            SchemeId::shamir(Modulus::default_prime(), 1, 3).unwrap(),
            SchemeId::additive(Modulus::power_of_two(64).unwrap(), 3).unwrap(),
        ] {
            let mut d = Dealer::new(scheme, 3).unwrap();
            let mut edabits: BTreeMap<EdaKind, u64> = [(EdaKind::Masked { width: 33 }, 3)].into();
            if scheme.modulus().is_prime_field() {
                edabits.insert(EdaKind::Field, 2);
            }
            let demand = Demand {
                triples: 5,
                bit_triples: 4,
                dabits: 3,
                edabits,
            };
            let parts = d.batch(&demand).unwrap();
            let header = MaterialHeader { party: 2, scheme };
            let mut buf = Vec::new();
            write_material(&mut buf, &header, &parts[1]).unwrap();
            let (h, b) = read_material(&buf[..]).unwrap();
            assert_eq!(h, header);
            assert_eq!(b, parts[1]);

            assert!(read_material(&buf[..buf.len() - 1]).is_err());
            let mut extra = buf.clone();
            extra.push(0);
            assert!(read_material(&extra[..]).is_err());
            let mut bad = buf.clone();
            bad[0] = b'X';
            assert!(read_material(&bad[..]).is_err());
        }
    }
}
