use serde::{Deserialize, Serialize};

/// Material consumed and data sent during a session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub triples: u64,
    pub bit_triples: u64,
    pub dabits: u64,
    pub edabits: u64,
    /// Octets sent, indexed by party id minus one.
    pub bytes_sent: Vec<u64>,
}

impl ResourceLedger {
    pub fn delta(&self, earlier: &ResourceLedger) -> ResourceLedger {
        ResourceLedger {
            triples: self.triples - earlier.triples,
            bit_triples: self.bit_triples - earlier.bit_triples,
            dabits: self.dabits - earlier.dabits,
            edabits: self.edabits - earlier.edabits,
            bytes_sent: self
                .bytes_sent
                .iter()
                .enumerate()
                .map(|(i, b)| b - earlier.bytes_sent.get(i).copied().unwrap_or(0))
                .collect(),
        }
    }
}

/// One CSV row of the metrics schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub scenario: String,
    pub size: u64,
    pub triples: u64,
    pub bit_triples: u64,
    pub dabits: u64,
    /// Mean over parties.
    pub bytes_sent: u64,
    pub compute_s: f64,
    pub total_s: f64,
    pub edabits: u64,
}

impl LedgerReport {
    pub fn write_csv<W: std::io::Write>(rows: &[LedgerReport], out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Counters of `l` as a report row with zero timings.
pub fn ledger_report(l: &ResourceLedger, scenario: &str, size: u64) -> LedgerReport {
    let bytes = if l.bytes_sent.is_empty() {
        0
    } else {
        l.bytes_sent.iter().sum::<u64>() / l.bytes_sent.len() as u64
    };
    LedgerReport {
        scenario: scenario.to_string(),
        size,
        triples: l.triples,
        bit_triples: l.bit_triples,
        dabits: l.dabits,
        bytes_sent: bytes,
        compute_s: 0.0,
        total_s: 0.0,
        edabits: l.edabits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_ledger_is_zero() {
        let r = ledger_report(&ResourceLedger::default(), "acs", 1);
        assert_eq!((r.triples, r.bit_triples, r.dabits, r.edabits, r.bytes_sent), (0, 0, 0, 0, 0));
    }

    #[test]
    fn csv_columns() {
        let l = ResourceLedger {
            triples: 100,
            bytes_sent: vec![10, 20, 30],
            ..Default::default()
        };
        let mut buf = Vec::new();
        LedgerReport::write_csv(&[ledger_report(&l, "acs", 10)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,size,triples,bit_triples,dabits,bytes_sent,compute_s,total_s,edabits"
        );
        assert_eq!(lines.next().unwrap(), "acs,10,100,0,0,20,0.0,0.0,0");
    }

    #[test]
    fn delta_subtracts() {
        let a = ResourceLedger {
            triples: 5,
            edabits: 2,
            bytes_sent: vec![100, 50],
            ..Default::default()
        };
        let b = ResourceLedger {
            triples: 8,
            edabits: 3,
            bytes_sent: vec![130, 90],
            ..Default::default()
        };
        let d = b.delta(&a);
        assert_eq!((d.triples, d.edabits), (3, 1));
        assert_eq!(d.bytes_sent, vec![30, 40]);
    }
}
