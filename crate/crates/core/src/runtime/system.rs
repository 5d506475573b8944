use log::{info, warn};
use rand::RngCore;

use super::{Mode, RuntimeError, Verdict};
use crate::compiler::Scenario;
use crate::net::{Channel, Tag, Width};
use crate::sharing::{SType, SchemeId};

/// Fresh shares of one observation vector, `out[p]` for party `p + 1`.
/// Arithmetic registers use `scheme`, Boolean ones XOR sharing.
pub fn share_observation<R: RngCore + ?Sized>(
    scheme: SchemeId,
    types: &[SType],
    obs: &[u128],
    rng: &mut R,
) -> Result<Vec<Vec<u128>>, RuntimeError> {
    let k = scheme.parties();
    let xor = SchemeId::boolean(k)?;
    let mut out = vec![Vec::with_capacity(obs.len()); k];
    for (&t, &v) in types.iter().zip(obs) {
        let shares = match t {
            SType::Arith => scheme.share_raw(v, rng),
            SType::Bool => xor.share_raw(v, rng),
        };
        for (p, s) in shares.into_iter().enumerate() {
            out[p].push(s);
        }
    }
    Ok(out)
}

/// Drives a session from the System's side: validates and shares each
/// observation, collects the flag from every party and ends with SYNC.
/// Returns the verdicts; the System learns nothing else.
pub fn run_system<R: RngCore>(
    scenario: &Scenario,
    scheme: SchemeId,
    mode: Mode,
    chan: &mut Channel,
    trace: impl IntoIterator<Item = Vec<u128>>,
    rng: &mut R,
) -> Result<Vec<Verdict>, RuntimeError> {
    let result = drive(scenario, scheme, mode, chan, trace, rng);
    if let Err(e) = &result {
        if !matches!(e, RuntimeError::Net(crate::net::NetError::Aborted { .. })) {
            warn!("system: {e}; aborting session");
            chan.abort_all();
        }
    }
    result
}

fn drive<R: RngCore>(
    scenario: &Scenario,
    scheme: SchemeId,
    mode: Mode,
    chan: &mut Channel,
    trace: impl IntoIterator<Item = Vec<u128>>,
    rng: &mut R,
) -> Result<Vec<Verdict>, RuntimeError> {
    let k = scheme.parties();
    let width = Width(scheme.modulus().byte_width());
    let types = scenario.program.program().obs_types();
    let mut verdicts = Vec::new();
    for (t, obs) in trace.into_iter().enumerate() {
        let round = t as u32 + 1;
        scenario
            .validate_obs(&obs)
            .map_err(|reason| RuntimeError::Observation { round, reason })?;
        chan.set_round(round)?;
        let shares = share_observation(scheme, &types, &obs, rng)?;
        for (p, s) in shares.iter().enumerate() {
            chan.send(p + 1, Tag::ObsShare, s, width)?;
        }
        let mut flag = None;
        for p in 1..=k {
            let f = chan.recv(p, Tag::FlagShare, Width(1), 1)?[0] == 1;
            if flag.is_some_and(|g| g != f) {
                return Err(RuntimeError::Disagreement(round));
            }
            flag = Some(f);
        }
        let flag = flag.unwrap_or(false);
        let terminal = flag && mode == Mode::StopOnViolation;
        if flag {
            info!("system: violation reported in round {round}");
        }
        verdicts.push(Verdict { round, flag, terminal });
        if terminal {
            return Ok(verdicts);
        }
    }
    for p in 1..=k {
        chan.send(p, Tag::Sync, &[], width)?;
    }
    Ok(verdicts)
}
