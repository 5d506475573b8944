use std::time::Instant;

use log::{debug, info, warn};

use super::{Mode, RuntimeError, Verdict};
use crate::compiler::Scenario;
use crate::dealer::ResourceLedger;
use crate::engine::{OpenRecord, PartyContext};
use crate::net::{Tag, ViewEvent, Width};
use crate::sharing::SType;
use crate::vm::execute_round;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartyOptions {
    /// Keep the received/sent messages and consumed material of every round.
    pub record_view: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u32,
    /// Wall time from receiving the observation shares to reporting the flag.
    pub total_s: f64,
    /// `total_s` minus time blocked on peers.
    pub compute_s: f64,
    /// Material and bytes of this round; bytes only at this party's index.
    pub ledger: ResourceLedger,
}

/// One round of a party's view: the messages it saw and the material it
/// consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyView {
    pub round: u32,
    pub events: Vec<ViewEvent>,
    pub coins: Vec<u128>,
}

#[derive(Debug, Clone)]
pub struct PartyOutcome {
    pub id: usize,
    pub verdicts: Vec<Verdict>,
    pub metrics: Vec<RoundMetrics>,
    pub views: Vec<PartyView>,
    /// Every opening of an unmasked value, for whitelist audits.
    pub unmasked: Vec<OpenRecord>,
    /// Count of masked values opened.
    pub masked_opens: u64,
    /// This party's shares of the carried state after each round.
    #[cfg(feature = "state-probe")]
    pub states: Vec<Vec<u128>>,
}

/// Public initial state as this party's shares.
fn initial_shares(scenario: &Scenario, ctx: &PartyContext) -> Vec<u128> {
    let m = ctx.modulus();
    scenario
        .program
        .program()
        .state_types()
        .into_iter()
        .zip(&scenario.initial_state)
        .map(|(t, &v)| match t {
            SType::Arith => ctx.constant(m.reduce(v)),
            SType::Bool => ctx.local().constant(v == 1) as u128,
        })
        .collect()
}

/// Serves rounds until the System sends SYNC, or until the first raised
/// flag under [`Mode::StopOnViolation`]. Any failure is broadcast as ABORT.
pub fn run_party(
    scenario: &Scenario,
    mode: Mode,
    ctx: &mut PartyContext,
    opts: PartyOptions,
) -> Result<PartyOutcome, RuntimeError> {
    let result = serve(scenario, mode, ctx, opts);
    if let Err(e) = &result {
        if !matches!(e, RuntimeError::Net(crate::net::NetError::Aborted { .. })) {
            warn!("party {}: {e}; aborting session", ctx.id());
            ctx.channel().abort_all();
        }
    }
    result
}

fn serve(
    scenario: &Scenario,
    mode: Mode,
    ctx: &mut PartyContext,
    opts: PartyOptions,
) -> Result<PartyOutcome, RuntimeError> {
    let id = ctx.id();
    let width = Width(ctx.modulus().byte_width());
    let n_obs = scenario.program.program().obs.len();
    if opts.record_view {
        ctx.channel().record_transcript();
        ctx.store().record_coins();
    }
    let mut out = PartyOutcome {
        id,
        verdicts: Vec::new(),
        metrics: Vec::new(),
        views: Vec::new(),
        unmasked: Vec::new(),
        masked_opens: 0,
        #[cfg(feature = "state-probe")]
        states: Vec::new(),
    };
    let mut state = initial_shares(scenario, ctx);
    let mut round = 1u32;
    loop {
        let (tag, at, obs) = ctx.channel().recv_any(0, &[Tag::ObsShare, Tag::Sync], width)?;
        if tag == Tag::Sync {
            debug!("party {id}: SYNC after {} rounds", round - 1);
            break;
        }
        if at != round {
            return Err(RuntimeError::Net(crate::net::NetError::Protocol(format!(
                "observation for round {at} while expecting round {round}"
            ))));
        }
        if obs.len() != n_obs {
            return Err(RuntimeError::Net(crate::net::NetError::Protocol(format!(
                "{} observation shares, program has {n_obs}",
                obs.len()
            ))));
        }
        let started = Instant::now();
        let before = (ctx.ledger(), ctx.channel().stats().recv_wait);
        ctx.channel().set_round(round)?;
        let r = execute_round(&scenario.program, ctx, &state, &obs, u64::from(round - 1))?;
        ctx.channel().send(0, Tag::FlagShare, &[r.flag as u128], Width(1))?;
        let total = started.elapsed();
        let waited = ctx.channel().stats().recv_wait - before.1;
        out.metrics.push(RoundMetrics {
            round,
            total_s: total.as_secs_f64(),
            compute_s: total.saturating_sub(waited).as_secs_f64(),
            ledger: ctx.ledger().delta(&before.0),
        });
        if opts.record_view {
            let events = ctx.channel().take_transcript();
            let coins = ctx.store().take_coins();
            out.views.push(PartyView { round, events, coins });
        }
        for rec in ctx.take_open_log() {
            if rec.label.is_masked() {
                out.masked_opens += rec.count;
            } else {
                out.unmasked.push(rec);
            }
        }
        state = r.next_state;
        #[cfg(feature = "state-probe")]
        out.states.push(state.clone());
        let terminal = r.flag && mode == Mode::StopOnViolation;
        if r.flag {
            info!("party {id}: violation in round {round}");
        }
        out.verdicts.push(Verdict {
            round,
            flag: r.flag,
            terminal,
        });
        if terminal {
            break;
        }
        round += 1;
    }
    Ok(out)
}
