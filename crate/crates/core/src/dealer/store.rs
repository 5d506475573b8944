use std::collections::{BTreeMap, VecDeque};
use std::sync::mpsc::Receiver;

use super::{
    BitTripleShare, DaBitShare, DealerError, EdaBitShare, EdaKind, MaterialBatch, TripleShare,
};

/// Single-consumer queues of one party's material.
///
/// Ids issued by the dealer increase strictly, so a per-queue watermark
/// detects any item presented twice.
#[derive(Default)]
pub struct MaterialStore {
    triples: VecDeque<TripleShare>,
    bit_triples: VecDeque<BitTripleShare>,
    dabits: VecDeque<DaBitShare>,
    edabits: BTreeMap<EdaKind, VecDeque<EdaBitShare>>,
    marks: BTreeMap<String, u64>,
    source: Option<Receiver<MaterialBatch>>,
    coins: Option<Vec<u128>>,
}

impl MaterialStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pulls further batches from `rx` whenever a queue runs dry.
    pub fn streaming(rx: Receiver<MaterialBatch>) -> Self {
        MaterialStore {
            source: Some(rx),
            ..Self::default()
        }
    }

    pub fn push(&mut self, batch: MaterialBatch) {
        self.triples.extend(batch.triples);
        self.bit_triples.extend(batch.bit_triples);
        self.dabits.extend(batch.dabits);
        for (k, items) in batch.edabits {
            self.edabits.entry(k).or_default().extend(items);
        }
    }

    /// Starts logging the share values of every item handed out.
    pub fn record_coins(&mut self) {
        self.coins.get_or_insert_with(Vec::new);
    }

    /// Values logged since the last call, in consumption order.
    pub fn take_coins(&mut self) -> Vec<u128> {
        self.coins.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn log(&mut self, values: impl IntoIterator<Item = u128>) {
        if let Some(c) = &mut self.coins {
            c.extend(values);
        }
    }

    fn refill(&mut self) -> bool {
        match self.source.as_ref().map(Receiver::recv) {
            Some(Ok(batch)) => {
                self.push(batch);
                true
            }
            Some(Err(_)) => {
                self.source = None;
                false
            }
            None => false,
        }
    }

    fn check(&mut self, kind: String, ids: impl Iterator<Item = u64>) -> Result<(), DealerError> {
        let mark = self.marks.entry(kind.clone()).or_insert(0);
        for id in ids {
            if id <= *mark {
                return Err(DealerError::DoubleConsumption { kind, id });
            }
            *mark = id;
        }
        Ok(())
    }

    pub fn take_triples(&mut self, n: usize) -> Result<Vec<TripleShare>, DealerError> {
        while self.triples.len() < n {
            if !self.refill() {
                return Err(exhausted("triple", n, self.triples.len()));
            }
        }
        let out: Vec<_> = self.triples.drain(..n).collect();
        self.check("triple".into(), out.iter().map(|t| t.id))?;
        self.log(out.iter().flat_map(|t| [t.a, t.b, t.c]));
        Ok(out)
    }

    pub fn take_bit_triples(&mut self, n: usize) -> Result<Vec<BitTripleShare>, DealerError> {
        while self.bit_triples.len() < n {
            if !self.refill() {
                return Err(exhausted("bit triple", n, self.bit_triples.len()));
            }
        }
        let out: Vec<_> = self.bit_triples.drain(..n).collect();
        self.check("bit triple".into(), out.iter().map(|t| t.id))?;
        self.log(out.iter().flat_map(|t| [t.a as u128, t.b as u128, t.c as u128]));
        Ok(out)
    }

    pub fn take_dabits(&mut self, n: usize) -> Result<Vec<DaBitShare>, DealerError> {
        while self.dabits.len() < n {
            if !self.refill() {
                return Err(exhausted("daBit", n, self.dabits.len()));
            }
        }
        let out: Vec<_> = self.dabits.drain(..n).collect();
        self.check("daBit".into(), out.iter().map(|t| t.id))?;
        self.log(out.iter().flat_map(|t| [t.arith, t.bit as u128]));
        Ok(out)
    }

    pub fn take_edabits(&mut self, kind: EdaKind, n: usize) -> Result<Vec<EdaBitShare>, DealerError> {
        loop {
            let have = self.edabits.get(&kind).map_or(0, VecDeque::len);
            if have >= n {
                break;
            }
            if !self.refill() {
                return Err(exhausted(&kind.to_string(), n, have));
            }
        }
        let out: Vec<_> = match self.edabits.get_mut(&kind) {
            Some(q) => q.drain(..n).collect(),
            None => Vec::new(),
        };
        self.check(kind.to_string(), out.iter().map(|t| t.id))?;
        self.log(out.iter().flat_map(|e| {
            [e.arith, e.high]
                .into_iter()
                .chain(e.bits.iter().map(|&b| b as u128))
        }));
        Ok(out)
    }
}

fn exhausted(kind: &str, needed: usize, available: usize) -> DealerError {
    DealerError::Exhausted {
        kind: kind.to_string(),
        needed,
        available,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Modulus;
    use crate::dealer::{Dealer, Demand};
    use crate::sharing::SchemeId;

    fn dealer() -> Dealer {
        Dealer::new(SchemeId::additive(Modulus::power_of_two(16).unwrap(), 2).unwrap(), 9).unwrap()
    }

    #[test]
    fn exhaustion_and_double_consumption() {
        let mut d = dealer();
        let demand = Demand {
            triples: 3,
            ..Demand::default()
        };
        let batch = d.batch(&demand).unwrap().remove(0);
        let mut s = MaterialStore::new();
        s.push(batch.clone());
        assert_eq!(s.take_triples(2).unwrap().len(), 2);
        assert!(matches!(s.take_triples(2), Err(DealerError::Exhausted { needed: 2, available: 1, .. })));
        assert_eq!(s.take_triples(1).unwrap().len(), 1);
        s.push(batch);
        assert!(matches!(s.take_triples(1), Err(DealerError::DoubleConsumption { .. })));
        assert!(s.take_dabits(1).is_err());
        assert!(s.take_edabits(EdaKind::Masked { width: 4 }, 0).unwrap().is_empty());
    }

    #[test]
    fn streaming_refills() {
        let per = Demand {
            triples: 2,
            edabits: [(EdaKind::Masked { width: 4 }, 1)].into_iter().collect(),
            ..Demand::default()
        };
        let (h, mut rxs) = dealer().spawn(per, Some(3)).unwrap();
        let mut s = MaterialStore::streaming(rxs.remove(0));
        assert_eq!(s.take_triples(5).unwrap().len(), 5);
        assert_eq!(s.take_edabits(EdaKind::Masked { width: 4 }, 3).unwrap().len(), 3);
        // the dealer stops once the other party hangs up
        drop(rxs);
        assert!(s.take_triples(2).is_err());
        h.join().unwrap();
    }
}
