use std::fs::{self, File};
use std::io::BufWriter;
use std::net::TcpListener;
use std::time::Duration;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{open_material, run_party, run_system, PartyOptions, PartyOutcome, RuntimeError, SessionConfig, Verdict};
use crate::compiler::Scenario;
use crate::dealer::{read_material, write_material, Dealer, MaterialHeader, MaterialStore};
use crate::engine::PartyContext;
use crate::net::{Channel, Tcp};
use crate::vm::cost_estimate;

const CONNECT_TIMEOUT: Duration = Duration::from_secs(30);

fn addrs(cfg: &SessionConfig) -> Result<(), RuntimeError> {
    if cfg.addrs.len() != cfg.parties {
        return Err(RuntimeError::Config(format!(
            "{} addresses for {} parties",
            cfg.addrs.len(),
            cfg.parties
        )));
    }
    Ok(())
}

/// Writes `rounds()` rounds of material for every party into
/// `material_dir`, one file per party.
pub fn deal_to_files(cfg: &SessionConfig, scenario: &Scenario) -> Result<(), RuntimeError> {
    let dir = cfg
        .material_dir
        .as_ref()
        .ok_or_else(|| RuntimeError::Config("material_dir is not set".into()))?;
    let scheme = cfg.scheme_id()?;
    let demand = cost_estimate(&scenario.program, scheme.modulus())?
        .demand()
        .for_rounds(cfg.rounds(), 0.0);
    fs::create_dir_all(dir)?;
    let batches = Dealer::new(scheme, cfg.seed)?.batch(&demand)?;
    for (i, batch) in batches.iter().enumerate() {
        let id = i + 1;
        let path = cfg.material_path(id).expect("material_dir is set");
        let header = MaterialHeader { party: id, scheme };
        write_material(BufWriter::new(File::create(&path)?), &header, batch)?;
        info!("dealer: wrote {}", path.display());
    }
    Ok(())
}

/// Runs party `id` over TCP with material from `material_dir`.
pub fn run_tcp_party(cfg: &SessionConfig, scenario: &Scenario, id: usize) -> Result<PartyOutcome, RuntimeError> {
    addrs(cfg)?;
    let scheme = cfg.scheme_id()?;
    let path = cfg
        .material_path(id)
        .ok_or_else(|| RuntimeError::Config("TCP parties need material_dir".into()))?;
    let (header, batch) = read_material(open_material(&path)?)?;
    if header.party != id || header.scheme != scheme {
        return Err(RuntimeError::Config(format!("{} does not belong to party {id}", path.display())));
    }
    let mut store = MaterialStore::new();
    store.push(batch);
    let addr = *cfg
        .addrs
        .get(id.wrapping_sub(1))
        .ok_or_else(|| RuntimeError::Config(format!("no party {id}")))?;
    let listener = TcpListener::bind(addr)?;
    info!("party {id}: listening on {addr}");
    let transport = Tcp::party(id, listener, &cfg.addrs, CONNECT_TIMEOUT)?;
    let mut ctx = PartyContext::new(scheme, Channel::new(Box::new(transport), cfg.parties), store)?;
    run_party(scenario, cfg.mode, &mut ctx, PartyOptions::default())
}

/// Runs the System over TCP, sharing `trace` round by round.
pub fn run_tcp_system(cfg: &SessionConfig, scenario: &Scenario, trace: &[Vec<u128>]) -> Result<Vec<Verdict>, RuntimeError> {
    addrs(cfg)?;
    let scheme = cfg.scheme_id()?;
    let transport = Tcp::system(&cfg.addrs, CONNECT_TIMEOUT)?;
    let mut chan = Channel::new(Box::new(transport), cfg.parties);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let trace = &trace[..trace.len().min(cfg.rounds() as usize)];
    run_system(scenario, scheme, cfg.mode, &mut chan, trace.iter().cloned(), &mut rng)
}
