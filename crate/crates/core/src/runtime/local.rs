use std::thread;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::party::PartyView;
use super::{open_material, run_party, run_system, session_rows, PartyOptions, PartyOutcome, RuntimeError, SessionConfig, Verdict};
use crate::compiler::Scenario;
use crate::dealer::{read_material, Dealer, LedgerReport, MaterialStore};
use crate::engine::PartyContext;
use crate::net::{Channel, InProcess, NetError, Transport, ViewEvent};
use crate::vm::cost_estimate;

/// Rounds of material per dealer batch when streaming.
const BATCH_ROUNDS: u64 = 8;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocalSession {
    /// Parties whose views are recorded.
    pub record: Vec<usize>,
    /// Record the System's transcript.
    pub record_system: bool,
}

#[derive(Debug, Clone)]
pub struct SessionResult {
    /// As reported to the System.
    pub verdicts: Vec<Verdict>,
    pub parties: Vec<PartyOutcome>,
    /// One metrics row per executed round.
    pub rows: Vec<LedgerReport>,
    pub system_view: Vec<ViewEvent>,
    pub wall_s: f64,
}

/// The view of one corrupted party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeView {
    pub party: usize,
    pub rounds: Vec<RoundView>,
}

pub type RoundView = PartyView;

/// Runs a whole session in this process: the System on the calling thread,
/// one thread per party, and a streaming dealer unless `material_dir` is
/// set.
pub fn run_local(cfg: &SessionConfig, scenario: &Scenario, trace: &[Vec<u128>]) -> Result<SessionResult, RuntimeError> {
    LocalSession::default().run(cfg, scenario, trace)
}

/// Records the views of `corrupted` over a session. The coalition must be
/// smaller than the party count and within the scheme's privacy threshold.
pub fn transcript_probe(
    cfg: &SessionConfig,
    scenario: &Scenario,
    trace: &[Vec<u128>],
    corrupted: &[usize],
) -> Result<Vec<ProbeView>, RuntimeError> {
    let scheme = cfg.scheme_id()?;
    let k = scheme.parties();
    let mut ids = corrupted.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != corrupted.len() || ids.iter().any(|&i| i == 0 || i > k) {
        return Err(RuntimeError::Config(format!("bad coalition {corrupted:?}")));
    }
    if ids.len() >= k || ids.len() > scheme.privacy_threshold() {
        return Err(RuntimeError::Config(format!(
            "coalition of {} exceeds what {scheme} protects against ({})",
            ids.len(),
            scheme.privacy_threshold()
        )));
    }
    let session = LocalSession {
        record: ids,
        record_system: false,
    };
    let result = session.run(cfg, scenario, trace)?;
    Ok(result
        .parties
        .into_iter()
        .filter(|p| session.record.contains(&p.id))
        .map(|p| ProbeView {
            party: p.id,
            rounds: p.views,
        })
        .collect())
}

fn stores(cfg: &SessionConfig, scenario: &Scenario) -> Result<Vec<MaterialStore>, RuntimeError> {
    let scheme = cfg.scheme_id()?;
    let k = scheme.parties();
    if cfg.material_dir.is_some() {
        return (1..=k)
            .map(|id| {
                let path = cfg.material_path(id).expect("material_dir is set");
                let (header, batch) = read_material(open_material(&path)?)?;
                if header.party != id || header.scheme != scheme {
                    return Err(RuntimeError::Config(format!(
                        "{} holds material of party {} under {}",
                        path.display(),
                        header.party,
                        header.scheme
                    )));
                }
                let mut s = MaterialStore::new();
                s.push(batch);
                Ok(s)
            })
            .collect();
    }
    let demand = cost_estimate(&scenario.program, scheme.modulus())?.demand();
    if demand.is_empty() {
        return Ok((0..k).map(|_| MaterialStore::new()).collect());
    }
    let dealer = Dealer::new(scheme, cfg.seed)?;
    let (_handle, rxs) = dealer.spawn(demand.for_rounds(BATCH_ROUNDS, 0.0), None)?;
    Ok(rxs.into_iter().map(MaterialStore::streaming).collect())
}

fn root_cause(errors: Vec<RuntimeError>) -> Option<RuntimeError> {
    let aborted = |e: &RuntimeError| matches!(e, RuntimeError::Net(NetError::Aborted { .. }));
    let mut errors = errors.into_iter();
    let first = errors.next()?;
    if !aborted(&first) {
        return Some(first);
    }
    Some(errors.find(|e| !aborted(e)).unwrap_or(first))
}

impl LocalSession {
    pub fn run(&self, cfg: &SessionConfig, scenario: &Scenario, trace: &[Vec<u128>]) -> Result<SessionResult, RuntimeError> {
        let scheme = cfg.scheme_id()?;
        if scheme.modulus() != scenario.config.modulus {
            return Err(RuntimeError::Config("session and scenario moduli differ".into()));
        }
        let k = scheme.parties();
        let trace = &trace[..trace.len().min(cfg.rounds() as usize)];
        let stores = stores(cfg, scenario)?;
        let mut mesh = InProcess::mesh(k + 1).into_iter();
        let mut system = Channel::new(Box::new(mesh.next().expect("mesh has node 0")), k);
        if self.record_system {
            system.record_transcript();
        }
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let started = Instant::now();
        let (sys, parties) = thread::scope(|s| {
            let handles: Vec<_> = mesh
                .zip(stores)
                .map(|(t, store)| {
                    let opts = PartyOptions {
                        record_view: self.record.contains(&t.me()),
                    };
                    let mode = cfg.mode;
                    s.spawn(move || {
                        let mut ctx = PartyContext::new(scheme, Channel::new(Box::new(t), k), store)?;
                        run_party(scenario, mode, &mut ctx, opts)
                    })
                })
                .collect();
            let sys = run_system(scenario, scheme, cfg.mode, &mut system, trace.iter().cloned(), &mut rng);
            let parties: Vec<_> = handles
                .into_iter()
                .map(|h| h.join().expect("party thread panicked"))
                .collect();
            (sys, parties)
        });
        let wall_s = started.elapsed().as_secs_f64();
        let mut errors = Vec::new();
        let verdicts = sys.map_err(|e| errors.push(e)).ok();
        let mut outcomes = Vec::with_capacity(k);
        for p in parties {
            match p {
                Ok(o) => outcomes.push(o),
                Err(e) => errors.push(e),
            }
        }
        if let Some(e) = root_cause(errors) {
            return Err(e);
        }
        let verdicts = verdicts.expect("no errors");
        for o in &outcomes {
            if o.verdicts != verdicts {
                return Err(RuntimeError::Disagreement(o.verdicts.len() as u32));
            }
        }
        let rows = session_rows(scenario.config.name.name(), scenario.config.size as u64, &outcomes);
        Ok(SessionResult {
            verdicts,
            parties: outcomes,
            rows,
            system_view: system.take_transcript(),
            wall_s,
        })
    }
}
