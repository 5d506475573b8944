//! Trusted dealer for correlated randomness, and the per-party stores that
//! consume it.

mod file;
mod ledger;
mod store;

pub use file::{read_material, write_material, MaterialHeader};
pub use ledger::{ledger_report, LedgerReport, ResourceLedger};
pub use store::MaterialStore;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::{self, JoinHandle};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Modulus, ModulusKind};
use crate::sharing::{SType, SchemeId, ShareVector, SharingError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DealerError {
    #[error("{0} cannot carry arithmetic material")]
    NotArithmetic(SchemeId),
    #[error("edaBit kind {kind} unsupported over {modulus}")]
    WidthTooLarge { kind: EdaKind, modulus: Modulus },
    #[error("{kind} exhausted: needed {needed}, {available} left")]
    Exhausted {
        kind: String,
        needed: usize,
        available: usize,
    },
    #[error("{kind} item {id} consumed twice or out of order")]
    DoubleConsumption { kind: String, id: u64 },
    #[error("material file: {0}")]
    File(String),
    #[error(transparent)]
    Sharing(#[from] SharingError),
}

/// Shape of an edaBit: `width` random bits with their arithmetic composition.
///
/// `Masked` items also carry a share of a uniform high mask `h` so that
/// `r + 2^width * h` statistically (prime) or perfectly (ring) hides a value
/// of `width` bits. `Field` items carry a uniform field element with all of
/// its bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdaKind {
    Masked { width: u32 },
    Field,
}

impl fmt::Display for EdaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdaKind::Masked { width } => write!(f, "edaBit/{width}"),
            EdaKind::Field => write!(f, "edaBit/field"),
        }
    }
}

impl EdaKind {
    /// Number of Boolean shares per item.
    pub fn bits(&self, modulus: Modulus) -> u32 {
        match self {
            EdaKind::Masked { width } => *width,
            EdaKind::Field => modulus.bits(),
        }
    }

    /// Bit length of the high mask, or `None` when the kind has no mask.
    pub fn high_bits(&self, modulus: Modulus) -> Option<u32> {
        match (self, modulus.kind()) {
            (EdaKind::Field, _) => None,
            (EdaKind::Masked { width }, ModulusKind::PowerOfTwo) => {
                let h = modulus.bits().saturating_sub(*width);
                (h > 0).then_some(h)
            }
            (EdaKind::Masked { width }, ModulusKind::Prime) => {
                let h = modulus.bits().saturating_sub(width + 2);
                (h > 0).then_some(h)
            }
        }
    }

    pub fn check(&self, modulus: Modulus) -> Result<(), DealerError> {
        let ok = match (self, modulus.kind()) {
            (EdaKind::Field, k) => k == ModulusKind::Prime,
            (EdaKind::Masked { width }, ModulusKind::PowerOfTwo) => {
                *width >= 1 && *width <= modulus.bits()
            }
            (EdaKind::Masked { width }, ModulusKind::Prime) => {
                *width >= 1 && *width + 2 <= modulus.bits()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(DealerError::WidthTooLarge {
                kind: *self,
                modulus,
            })
        }
    }
}

/// Material counts, per round or per batch.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demand {
    pub triples: u64,
    pub bit_triples: u64,
    pub dabits: u64,
    pub edabits: BTreeMap<EdaKind, u64>,
}

impl Demand {
    pub fn is_empty(&self) -> bool {
        self.triples == 0
            && self.bit_triples == 0
            && self.dabits == 0
            && self.edabits.values().all(|&n| n == 0)
    }

    pub fn total_edabits(&self) -> u64 {
        self.edabits.values().sum()
    }

    pub fn add(&mut self, other: &Demand) {
        self.triples += other.triples;
        self.bit_triples += other.bit_triples;
        self.dabits += other.dabits;
        for (k, n) in &other.edabits {
            *self.edabits.entry(*k).or_default() += n;
        }
    }

    /// `rounds` rounds worth of material with fractional slack, rounded up.
    pub fn for_rounds(&self, rounds: u64, slack: f64) -> Demand {
        let f = |n: u64| ((n * rounds) as f64 * (1.0 + slack)).ceil() as u64;
        Demand {
            triples: f(self.triples),
            bit_triples: f(self.bit_triples),
            dabits: f(self.dabits),
            edabits: self.edabits.iter().map(|(k, &n)| (*k, f(n))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeaverTriple {
    pub id: u64,
    pub a: ShareVector,
    pub b: ShareVector,
    pub c: ShareVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitTriple {
    pub id: u64,
    pub a: ShareVector,
    pub b: ShareVector,
    pub c: ShareVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaBit {
    pub id: u64,
    pub b_arith: ShareVector,
    pub b_bool: ShareVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdaBit {
    pub id: u64,
    pub kind: EdaKind,
    pub r_arith: ShareVector,
    /// Least-significant first.
    pub r_bits: Vec<ShareVector>,
    pub high: Option<ShareVector>,
}

/// One party's view of a Beaver triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleShare {
    pub id: u64,
    pub a: u128,
    pub b: u128,
    pub c: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitTripleShare {
    pub id: u64,
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DaBitShare {
    pub id: u64,
    pub arith: u128,
    pub bit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdaBitShare {
    pub id: u64,
    pub arith: u128,
    pub bits: Vec<bool>,
    /// Share of the high mask; zero when the kind has none.
    pub high: u128,
}

/// Material destined for one party.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaterialBatch {
    pub triples: Vec<TripleShare>,
    pub bit_triples: Vec<BitTripleShare>,
    pub dabits: Vec<DaBitShare>,
    pub edabits: BTreeMap<EdaKind, Vec<EdaBitShare>>,
}

impl MaterialBatch {
    pub fn counts(&self) -> Demand {
        Demand {
            triples: self.triples.len() as u64,
            bit_triples: self.bit_triples.len() as u64,
            dabits: self.dabits.len() as u64,
            edabits: self.edabits.iter().map(|(k, v)| (*k, v.len() as u64)).collect(),
        }
    }
}

/// Semi-honest trusted dealer over one arithmetic scheme and XOR sharing
/// among the same parties.
pub struct Dealer {
    arith: SchemeId,
    boolean: SchemeId,
    rng: ChaCha20Rng,
    next_id: u64,
    issued: Demand,
}

impl Dealer {
    pub fn new(arith: SchemeId, seed: u64) -> Result<Self, DealerError> {
        if arith.stype() != SType::Arith {
            return Err(DealerError::NotArithmetic(arith));
        }
        Ok(Dealer {
            arith,
            boolean: SchemeId::boolean(arith.parties())?,
            rng: ChaCha20Rng::seed_from_u64(seed),
            next_id: 1,
            issued: Demand::default(),
        })
    }

    pub fn scheme(&self) -> SchemeId {
        self.arith
    }

    /// Everything issued so far.
    pub fn issued(&self) -> &Demand {
        &self.issued
    }

    fn id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn bit(&mut self) -> bool {
        self.rng.next_u32() & 1 == 1
    }

    fn share_bit(&mut self, b: bool) -> Vec<u128> {
        self.boolean.share_raw(b as u128, &mut self.rng)
    }

    fn raw_triple(&mut self) -> (u64, [Vec<u128>; 3]) {
        let m = self.arith.modulus();
        let a = m.sample(&mut self.rng);
        let b = m.sample(&mut self.rng);
        let c = m.mul(a, b);
        self.issued.triples += 1;
        let id = self.id();
        let s = self.arith;
        (
            id,
            [
                s.share_raw(a, &mut self.rng),
                s.share_raw(b, &mut self.rng),
                s.share_raw(c, &mut self.rng),
            ],
        )
    }

    fn raw_bit_triple(&mut self) -> (u64, [Vec<u128>; 3]) {
        let a = self.bit();
        let b = self.bit();
        self.issued.bit_triples += 1;
        let id = self.id();
        (id, [self.share_bit(a), self.share_bit(b), self.share_bit(a & b)])
    }

    fn raw_dabit(&mut self) -> (u64, Vec<u128>, Vec<u128>) {
        let b = self.bit();
        self.issued.dabits += 1;
        let id = self.id();
        let arith = self.arith.share_raw(b as u128, &mut self.rng);
        (id, arith, self.share_bit(b))
    }

    /// `(id, arith shares, per-bit shares, high-mask shares)`.
    #[allow(clippy::type_complexity)]
    fn raw_edabit(&mut self, kind: EdaKind) -> (u64, Vec<u128>, Vec<Vec<u128>>, Option<Vec<u128>>) {
        let m = self.arith.modulus();
        let r = match kind {
            EdaKind::Field => m.sample(&mut self.rng),
            EdaKind::Masked { width } => {
                let v = ((self.rng.next_u64() as u128) << 64) | self.rng.next_u64() as u128;
                if width >= 128 {
                    v
                } else {
                    v & ((1u128 << width) - 1)
                }
            }
        };
        let high = kind.high_bits(m).map(|hb| {
            let v = ((self.rng.next_u64() as u128) << 64) | self.rng.next_u64() as u128;
            v & ((1u128 << hb) - 1)
        });
        *self.issued.edabits.entry(kind).or_default() += 1;
        let id = self.id();
        let s = self.arith;
        let arith = s.share_raw(r, &mut self.rng);
        let bits = (0..kind.bits(m))
            .map(|i| self.share_bit(r >> i & 1 == 1))
            .collect();
        let high = high.map(|h| s.share_raw(h, &mut self.rng));
        (id, arith, bits, high)
    }

    fn sv(scheme: SchemeId, raw: &[u128]) -> ShareVector {
        ShareVector::from_raw(scheme, raw).expect("dealer output is well-formed")
    }

    pub fn issue_triples(&mut self, n: usize) -> Vec<BeaverTriple> {
        (0..n)
            .map(|_| {
                let (id, [a, b, c]) = self.raw_triple();
                let s = self.arith;
                BeaverTriple {
                    id,
                    a: Self::sv(s, &a),
                    b: Self::sv(s, &b),
                    c: Self::sv(s, &c),
                }
            })
            .collect()
    }

    pub fn issue_bit_triples(&mut self, n: usize) -> Vec<BitTriple> {
        (0..n)
            .map(|_| {
                let (id, [a, b, c]) = self.raw_bit_triple();
                let s = self.boolean;
                BitTriple {
                    id,
                    a: Self::sv(s, &a),
                    b: Self::sv(s, &b),
                    c: Self::sv(s, &c),
                }
            })
            .collect()
    }

    pub fn issue_dabits(&mut self, n: usize) -> Vec<DaBit> {
        (0..n)
            .map(|_| {
                let (id, a, b) = self.raw_dabit();
                DaBit {
                    id,
                    b_arith: Self::sv(self.arith, &a),
                    b_bool: Self::sv(self.boolean, &b),
                }
            })
            .collect()
    }

    pub fn issue_edabits(&mut self, n: usize, kind: EdaKind) -> Result<Vec<EdaBit>, DealerError> {
        kind.check(self.arith.modulus())?;
        Ok((0..n)
            .map(|_| {
                let (id, arith, bits, high) = self.raw_edabit(kind);
                EdaBit {
                    id,
                    kind,
                    r_arith: Self::sv(self.arith, &arith),
                    r_bits: bits.iter().map(|b| Self::sv(self.boolean, b)).collect(),
                    high: high.map(|h| Self::sv(self.arith, &h)),
                }
            })
            .collect())
    }

    /// Generates `demand` and splits it into one batch per party.
    pub fn batch(&mut self, demand: &Demand) -> Result<Vec<MaterialBatch>, DealerError> {
        let m = self.arith.modulus();
        for kind in demand.edabits.keys() {
            kind.check(m)?;
        }
        let k = self.arith.parties();
        let mut out = vec![MaterialBatch::default(); k];
        for _ in 0..demand.triples {
            let (id, [a, b, c]) = self.raw_triple();
            for (p, batch) in out.iter_mut().enumerate() {
                batch.triples.push(TripleShare {
                    id,
                    a: a[p],
                    b: b[p],
                    c: c[p],
                });
            }
        }
        for _ in 0..demand.bit_triples {
            let (id, [a, b, c]) = self.raw_bit_triple();
            for (p, batch) in out.iter_mut().enumerate() {
                batch.bit_triples.push(BitTripleShare {
                    id,
                    a: a[p] == 1,
                    b: b[p] == 1,
                    c: c[p] == 1,
                });
            }
        }
        for _ in 0..demand.dabits {
            let (id, a, b) = self.raw_dabit();
            for (p, batch) in out.iter_mut().enumerate() {
                batch.dabits.push(DaBitShare {
                    id,
                    arith: a[p],
                    bit: b[p] == 1,
                });
            }
        }
        for (&kind, &n) in &demand.edabits {
            for _ in 0..n {
                let (id, arith, bits, high) = self.raw_edabit(kind);
                for (p, batch) in out.iter_mut().enumerate() {
                    batch.edabits.entry(kind).or_default().push(EdaBitShare {
                        id,
                        arith: arith[p],
                        bits: bits.iter().map(|b| b[p] == 1).collect(),
                        high: high.as_ref().map_or(0, |h| h[p]),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Streams `per_batch` material to every party from a background thread,
    /// `batches` times or until all receivers hang up.
    pub fn spawn(
        mut self,
        per_batch: Demand,
        batches: Option<u64>,
    ) -> Result<(JoinHandle<Demand>, Vec<Receiver<MaterialBatch>>), DealerError> {
        for kind in per_batch.edabits.keys() {
            kind.check(self.arith.modulus())?;
        }
        let k = self.arith.parties();
        let (txs, rxs): (Vec<_>, Vec<_>) = (0..k).map(|_| sync_channel::<MaterialBatch>(2)).unzip();
        let handle = thread::Builder::new()
            .name("dealer".into())
            .spawn(move || {
                let mut sent = 0u64;
                while batches.is_none_or(|b| sent < b) {
                    let parts = self.batch(&per_batch).expect("demand checked before spawning");
                    for (tx, part) in txs.iter().zip(parts) {
                        if tx.send(part).is_err() {
                            return self.issued;
                        }
                    }
                    sent += 1;
                }
                self.issued
            })
            .map_err(|e| DealerError::File(e.to_string()))?;
        Ok((handle, rxs))
    }
}
