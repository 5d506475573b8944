//! Online sessions: the System client, the monitor parties' round loop,
//! in-process and TCP wiring, and per-round metrics.

mod local;
mod party;
mod system;
mod tcp;

pub use local::{run_local, transcript_probe, LocalSession, ProbeView, RoundView, SessionResult};
pub use party::{run_party, PartyOptions, PartyOutcome, PartyView, RoundMetrics};
pub use system::{run_system, share_observation};
pub use tcp::{deal_to_files, run_tcp_party, run_tcp_system};

use std::net::SocketAddr;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{CompileError, ScenarioConfig};
use crate::dealer::{DealerError, LedgerReport, ResourceLedger};
use crate::engine::EngineError;
use crate::net::NetError;
use crate::sharing::{SchemeId, SharingError};
use crate::vm::VmError;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("observation rejected in round {round}: {reason}")]
    Observation { round: u32, reason: String },
    #[error("parties disagree on the flag of round {0}")]
    Disagreement(u32),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Vm(#[from] VmError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dealer(#[from] DealerError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// End the session at the first raised flag.
    #[default]
    StopOnViolation,
    /// Run the whole trace, reporting every flag.
    LogAndContinue,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Additive,
    #[default]
    Shamir,
}

/// The public outcome of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// Wire round, starting at 1.
    pub round: u32,
    pub flag: bool,
    /// The session ended with this round.
    pub terminal: bool,
}

/// Everything the parties and the System agree on before a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// Number of monitor parties.
    #[serde(default = "three")]
    pub parties: usize,
    #[serde(default)]
    pub scheme: SchemeKind,
    /// Shamir degree; defaults to `(parties - 1) / 2`.
    #[serde(default)]
    pub threshold: Option<usize>,
    #[serde(default)]
    pub mode: Mode,
    /// Overrides `scenario.rounds`.
    #[serde(default)]
    pub rounds: Option<u64>,
    /// Seeds the dealer; the System derives its sharing randomness from it.
    #[serde(default)]
    pub seed: u64,
    /// TCP endpoint of party `i` at index `i - 1`.
    #[serde(default)]
    pub addrs: Vec<SocketAddr>,
    /// Preprocessed material files; parties stream from a local dealer when
    /// unset.
    #[serde(default)]
    pub material_dir: Option<PathBuf>,
    pub scenario: ScenarioConfig,
}

fn three() -> usize {
    3
}

impl SessionConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        SessionConfig {
            parties: 3,
            scheme: SchemeKind::default(),
            threshold: None,
            mode: Mode::default(),
            rounds: None,
            seed: 0,
            addrs: Vec::new(),
            material_dir: None,
            scenario,
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds.unwrap_or(self.scenario.rounds)
    }

    pub fn scheme_id(&self) -> Result<SchemeId, RuntimeError> {
        let k = self.parties;
        if k < 2 {
            return Err(RuntimeError::Config(format!("{k} parties; at least 2 are needed")));
        }
        let m = self.scenario.modulus;
        Ok(match self.scheme {
            SchemeKind::Additive => {
                if self.threshold.is_some() {
                    return Err(RuntimeError::Config("threshold applies to shamir only".into()));
                }
                SchemeId::additive(m, k)?
            }
            SchemeKind::Shamir => {
                let t = self.threshold.unwrap_or((k - 1) / 2);
                if t == 0 || t >= k {
                    return Err(RuntimeError::Config(format!("threshold {t} with {k} parties")));
                }
                SchemeId::shamir(m, t, k)?
            }
        })
    }

    /// Material file of party `id` inside `material_dir`.
    pub fn material_path(&self, id: usize) -> Option<PathBuf> {
        self.material_dir.as_ref().map(|d| d.join(format!("party{id}.mat")))
    }
}

fn open_material(path: &std::path::Path) -> Result<std::fs::File, RuntimeError> {
    std::fs::File::open(path).map_err(|e| RuntimeError::Config(format!("material file {}: {e}", path.display())))
}

/// Merges per-party round metrics into one report row per round.
/// Material counts come from party 1; timings take the slowest party;
/// bytes are the mean over parties.
pub fn session_rows(scenario: &str, size: u64, parties: &[PartyOutcome]) -> Vec<LedgerReport> {
    let Some(first) = parties.first() else { return Vec::new() };
    (0..first.metrics.len())
        .map(|r| {
            let mut ledger = first.metrics[r].ledger.clone();
            for p in parties {
                let own = p.id - 1;
                if let (Some(m), Some(slot)) = (p.metrics.get(r), ledger.bytes_sent.get_mut(own)) {
                    *slot = m.ledger.bytes_sent[own];
                }
            }
            let mut row = crate::dealer::ledger_report(&ledger, scenario, size);
            let slowest = |f: fn(&RoundMetrics) -> f64| {
                parties
                    .iter()
                    .filter_map(|p| p.metrics.get(r).map(f))
                    .fold(0.0, f64::max)
            };
            row.compute_s = slowest(|m| m.compute_s);
            row.total_s = slowest(|m| m.total_s);
            row
        })
        .collect()
}

/// Per-iteration means of `rows`.
pub fn mean_row(rows: &[LedgerReport]) -> Option<LedgerReport> {
    let first = rows.first()?;
    let n = rows.len() as f64;
    let mean = |f: fn(&LedgerReport) -> u64| (rows.iter().map(f).sum::<u64>() as f64 / n).round() as u64;
    Some(LedgerReport {
        scenario: first.scenario.clone(),
        size: first.size,
        triples: mean(|r| r.triples),
        bit_triples: mean(|r| r.bit_triples),
        dabits: mean(|r| r.dabits),
        bytes_sent: mean(|r| r.bytes_sent),
        compute_s: rows.iter().map(|r| r.compute_s).sum::<f64>() / n,
        total_s: rows.iter().map(|r| r.total_s).sum::<f64>() / n,
        edabits: mean(|r| r.edabits),
    })
}

/// Sum of a party's per-round ledgers.
pub fn total_ledger(metrics: &[RoundMetrics]) -> ResourceLedger {
    let mut total = ResourceLedger::default();
    for m in metrics {
        total.triples += m.ledger.triples;
        total.bit_triples += m.ledger.bit_triples;
        total.dabits += m.ledger.dabits;
        total.edabits += m.ledger.edabits;
        if total.bytes_sent.len() < m.ledger.bytes_sent.len() {
            total.bytes_sent.resize(m.ledger.bytes_sent.len(), 0);
        }
        for (t, b) in total.bytes_sent.iter_mut().zip(&m.ledger.bytes_sent) {
            *t += b;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::ScenarioKind;

    #[test]
    fn session_config_from_toml() {
        let text = r#"
parties = 3
scheme = "shamir"
mode = "log-and-continue"
seed = 9
addrs = ["127.0.0.1:7001", "127.0.0.1:7002", "127.0.0.1:7003"]

[scenario]
name = "locks"
size = 100
"#;
        let c: SessionConfig = toml::from_str(text).unwrap();
        assert_eq!(c.mode, Mode::LogAndContinue);
        assert_eq!(c.scenario.name, ScenarioKind::Locks);
        assert_eq!(c.rounds(), 50);
        let s = c.scheme_id().unwrap();
        assert_eq!((s.parties(), s.privacy_threshold()), (3, 1));
        assert_eq!(c.addrs[2].port(), 7003);
    }

    #[test]
    fn rejects_bad_thresholds() {
        let mut c = SessionConfig::new(ScenarioConfig::new(ScenarioKind::Acs, 1));
        c.threshold = Some(3);
        assert!(c.scheme_id().is_err());
        c.parties = 1;
        c.threshold = None;
        assert!(c.scheme_id().is_err());
        c.parties = 2;
        c.scheme = SchemeKind::Additive;
        assert_eq!(c.scheme_id().unwrap().privacy_threshold(), 1);
    }
}
