//! The four benchmark monitors plus user programs, each with a plaintext
//! oracle that does not go through the compiler or the VM.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{compile, CompileError, CompileOptions, Spec, SpecExpr as E, VarDecl};
use crate::algebra::Modulus;
use crate::sharing::SType;
use crate::vm::{interpret, parse_program, typecheck, CheckedProgram, PublicInput, VmError};

/// Comparison width floor for scenario counters.
pub const COUNTER_WIDTH: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Acs,
    Locks,
    Car,
    Bloodsugar,
    Custom,
}

impl ScenarioKind {
    pub const BENCHMARKS: [ScenarioKind; 4] =
        [ScenarioKind::Acs, ScenarioKind::Locks, ScenarioKind::Car, ScenarioKind::Bloodsugar];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Acs => "acs",
            ScenarioKind::Locks => "locks",
            ScenarioKind::Car => "car",
            ScenarioKind::Bloodsugar => "bloodsugar",
            ScenarioKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [ScenarioKind::Custom]
            .into_iter()
            .chain(ScenarioKind::BENCHMARKS)
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

/// Numeric bounds. Each scenario reads only its own fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// ACS: largest per-door count in one round.
    pub max_count: u64,
    /// Car: sphere radius `min(r_base + growth * t, r_max)`.
    pub r_base: u64,
    pub growth: u64,
    pub r_max: u64,
    /// Car: largest per-axis displacement limb in one round.
    pub max_step: u64,
    /// Car: public offset so that positions are nonnegative.
    pub center: u64,
    /// Blood sugar: readings at times `[t - window_end + window_start, t]`
    /// are checked at time `t`.
    pub window_start: u64,
    pub window_end: u64,
    pub threshold: u64,
    pub max_reading: u64,
    /// Custom: bound for arithmetic observations.
    pub max_obs: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            max_count: 3,
            r_base: 20,
            growth: 1,
            r_max: 200,
            max_step: 5,
            center: 1 << 20,
            window_start: 600,
            window_end: 700,
            threshold: 200,
            max_reading: 1000,
            max_obs: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioKind,
    /// Doors, locks or dimensions; unused by blood sugar and custom.
    #[serde(default = "one")]
    pub size: usize,
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default)]
    pub modulus: Modulus,
    /// Program text file for `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

fn one() -> usize {
    1
}

fn default_rounds() -> u64 {
    50
}

impl ScenarioConfig {
    pub fn new(name: ScenarioKind, size: usize) -> Self {
        ScenarioConfig {
            name,
            size,
            rounds: default_rounds(),
            modulus: Modulus::default(),
            program: None,
            params: Params::default(),
        }
    }
}

/// A compiled monitor with what the System needs to drive it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub program: CheckedProgram,
    pub initial_state: Vec<u128>,
    pub obs: Vec<VarDecl>,
}

fn invalid(msg: String) -> CompileError {
    CompileError::Range(msg)
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Scenario, CompileError> {
        let p = &config.params;
        if config.name != ScenarioKind::Custom && config.size == 0 {
            return Err(invalid("scenario size must be positive".into()));
        }
        let (spec, initial_state) = match config.name {
            ScenarioKind::Acs => acs_spec(config.size, p, config.rounds),
            ScenarioKind::Locks => locks_spec(config.size),
            ScenarioKind::Car => car_spec(config.size, p)?,
            ScenarioKind::Bloodsugar => bloodsugar_spec(p)?,
            ScenarioKind::Custom => return Scenario::custom(config),
        };
        let opts = CompileOptions {
            modulus: config.modulus,
            cmp_width: Some(COUNTER_WIDTH),
        };
        let program = compile(&spec, &opts)?;
        Ok(Scenario {
            config: config.clone(),
            program,
            initial_state,
            obs: spec.obs,
        })
    }

    fn custom(config: &ScenarioConfig) -> Result<Scenario, CompileError> {
        let path = config
            .program
            .as_ref()
            .ok_or_else(|| invalid("custom scenario needs a program file".into()))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("reading {}: {e}", path.display())))?;
        let program = parse_program(&text).map_err(VmError::from)?;
        Ok(Scenario::with_program(config, typecheck(&program)?))
    }

    /// A custom scenario around an already checked program. Arithmetic
    /// observations range over `[0, params.max_obs]`; the initial state is
    /// all zeros.
    pub fn with_program(config: &ScenarioConfig, program: CheckedProgram) -> Scenario {
        let obs = program
            .program()
            .obs_types()
            .into_iter()
            .enumerate()
            .map(|(i, t)| match t {
                SType::Arith => VarDecl::arith(format!("x{i}"), 0, config.params.max_obs as u128),
                SType::Bool => VarDecl::boolean(format!("x{i}")),
            })
            .collect();
        let initial_state = vec![0; program.program().state.len()];
        Scenario {
            config: ScenarioConfig {
                name: ScenarioKind::Custom,
                ..config.clone()
            },
            program,
            initial_state,
            obs,
        }
    }

    /// System-side check of one round's observation vector.
    pub fn validate_obs(&self, obs: &[u128]) -> Result<(), String> {
        if obs.len() != self.obs.len() {
            return Err(format!("expected {} observations, got {}", self.obs.len(), obs.len()));
        }
        for (v, d) in obs.iter().zip(&self.obs) {
            if *v < d.min || *v > d.max {
                return Err(format!("{} = {v} outside [{}, {}]", d.name, d.min, d.max));
            }
        }
        if self.config.name == ScenarioKind::Locks {
            if let Some(i) = obs.chunks(2).position(|e| e == [1, 1]) {
                return Err(format!("lock {i} locked and unlocked in one round"));
            }
        }
        Ok(())
    }

    /// A valid trace with occasional violations.
    pub fn random_trace<R: Rng>(&self, rounds: usize, rng: &mut R) -> Vec<Vec<u128>> {
        let p = &self.config.params;
        let mut direction: Vec<bool> = Vec::new();
        (0..rounds)
            .map(|_| match self.config.name {
                ScenarioKind::Locks => (0..self.config.size)
                    .flat_map(|_| match rng.gen_range(0..4) {
                        0 => [1, 0],
                        1 => [0, 1],
                        _ => [0, 0],
                    })
                    .collect(),
                ScenarioKind::Bloodsugar => {
                    let x = if rng.gen_bool(0.03) {
                        rng.gen_range(p.threshold + 1..=p.max_reading.max(p.threshold + 1))
                    } else {
                        rng.gen_range(70..=p.threshold.max(70))
                    };
                    vec![x.min(p.max_reading) as u128]
                }
                ScenarioKind::Car => {
                    // drift outward along a random direction
                    if direction.is_empty() {
                        direction = (0..self.config.size).map(|_| rng.gen()).collect();
                    }
                    let weak = p.max_step / 3;
                    direction
                        .iter()
                        .flat_map(|&up| {
                            let (hi, lo) = (rng.gen_range(0..=p.max_step), rng.gen_range(0..=weak));
                            if up { [hi, lo] } else { [lo, hi] }
                        })
                        .map(u128::from)
                        .collect()
                }
                _ => self.obs.iter().map(|d| rng.gen_range(d.min..=d.max)).collect(),
            })
            .collect()
    }

    /// Plaintext flags for `trace`, computed directly from the scenario's
    /// definition. Custom programs fall back to the VM interpreter.
    pub fn oracle(&self, trace: &[Vec<u128>]) -> Result<Vec<bool>, VmError> {
        let p = &self.config.params;
        let n = self.config.size;
        Ok(match self.config.name {
            ScenarioKind::Acs => acs_oracle(n, trace),
            ScenarioKind::Locks => locks_oracle(n, trace),
            ScenarioKind::Car => car_oracle(n, p, trace),
            ScenarioKind::Bloodsugar => bloodsugar_oracle(p, trace),
            ScenarioKind::Custom => {
                let mut state = self.initial_state.clone();
                let mut flags = Vec::with_capacity(trace.len());
                for (t, obs) in trace.iter().enumerate() {
                    let out = interpret(&self.program, self.config.modulus, &state, obs, t as u64)?;
                    flags.push(out.flag);
                    state = out.next_state;
                }
                flags
            }
        })
    }
}

/// Flags for a benchmark scenario.
pub fn oracle_flags(config: &ScenarioConfig, trace: &[Vec<u128>]) -> Result<Vec<bool>, CompileError> {
    Ok(Scenario::build(config)?.oracle(trace)?)
}

pub fn build_acs(doors: usize) -> Result<Scenario, CompileError> {
    Scenario::build(&ScenarioConfig::new(ScenarioKind::Acs, doors))
}

pub fn build_locks(locks: usize) -> Result<Scenario, CompileError> {
    Scenario::build(&ScenarioConfig::new(ScenarioKind::Locks, locks))
}

pub fn build_car(dims: usize) -> Result<Scenario, CompileError> {
    Scenario::build(&ScenarioConfig::new(ScenarioKind::Car, dims))
}

pub fn build_bloodsugar(window_start: u64, window_end: u64, threshold: u64) -> Result<Scenario, CompileError> {
    let mut c = ScenarioConfig::new(ScenarioKind::Bloodsugar, 1);
    c.params.window_start = window_start;
    c.params.window_end = window_end;
    c.params.threshold = threshold;
    Scenario::build(&c)
}

// Per door: cumulative entries and exits of type A and B. Observation i
// updates state i.
fn acs_spec(doors: usize, p: &Params, rounds: u64) -> (Spec, Vec<u128>) {
    const NAMES: [&str; 4] = ["entA", "exA", "entB", "exB"];
    let max_total = p.max_count as u128 * rounds.max(1) as u128;
    let decl = |prefix: &str, max: u128| -> Vec<VarDecl> {
        (0..doors)
            .flat_map(|d| NAMES.iter().map(move |k| (d, k)))
            .map(|(d, k)| VarDecl::arith(format!("{prefix}{k}{d}"), 0, max))
            .collect()
    };
    let next: Vec<E> = (0..4 * doors).map(|i| E::add(E::State(i), E::Obs(i))).collect();
    let side = |a: usize, b: usize| E::Sum((0..doors).flat_map(|d| [next[4 * d + a].clone(), next[4 * d + b].clone()]).collect());
    // entA - exA < entB - exB, rearranged to avoid negatives
    let flag = E::lt(side(0, 3), side(2, 1));
    let spec = Spec {
        state: decl("total_", max_total),
        obs: decl("", p.max_count as u128),
        pubs: vec![],
        next,
        flag,
        hold_on_violation: true,
    };
    (spec, vec![0; 4 * doors])
}

fn locks_spec(locks: usize) -> (Spec, Vec<u128>) {
    let mut next = Vec::with_capacity(locks);
    let mut bad = Vec::with_capacity(locks);
    for i in 0..locks {
        let (s, lock, unlock) = (E::State(i), E::Obs(2 * i), E::Obs(2 * i + 1));
        let relock = E::and(lock.clone(), s.clone());
        let reunlock = E::and(unlock.clone(), E::not(s.clone()));
        // a valid event toggles the state, a repeated one leaves it
        next.push(E::xor(
            E::xor(E::xor(s, lock), relock.clone()),
            E::xor(unlock, reunlock.clone()),
        ));
        bad.push(E::xor(relock, reunlock));
    }
    let spec = Spec {
        state: (0..locks).map(|i| VarDecl::boolean(format!("locked{i}"))).collect(),
        obs: (0..locks)
            .flat_map(|i| [VarDecl::boolean(format!("lock{i}")), VarDecl::boolean(format!("unlock{i}"))])
            .collect(),
        pubs: vec![],
        next,
        flag: E::Any(bad),
        hold_on_violation: false,
    };
    (spec, vec![0; locks])
}

// Coordinates are stored as center + offset; each round adds plus - minus.
fn car_spec(dims: usize, p: &Params) -> Result<(Spec, Vec<u128>), CompileError> {
    if p.center < p.r_max + p.max_step {
        return Err(invalid(format!(
            "center {} must be at least r_max + max_step = {}",
            p.center,
            p.r_max + p.max_step
        )));
    }
    let c = p.center as u128;
    let next: Vec<E> = (0..dims)
        .map(|i| E::sub(E::add(E::State(i), E::Obs(2 * i)), E::Obs(2 * i + 1)))
        .collect();
    let norm = E::Sum(next.iter().map(|e| E::sq_diff(e.clone(), E::Const(c))).collect());
    let spec = Spec {
        state: (0..dims)
            .map(|i| VarDecl::arith(format!("pos{i}"), c - p.r_max as u128, c + p.r_max as u128))
            .collect(),
        obs: (0..dims)
            .flat_map(|i| {
                [
                    VarDecl::arith(format!("plus{i}"), 0, p.max_step as u128),
                    VarDecl::arith(format!("minus{i}"), 0, p.max_step as u128),
                ]
            })
            .collect(),
        pubs: vec![PublicInput::RadiusSq {
            base: p.r_base,
            growth: p.growth,
            max: p.r_max,
        }],
        next,
        flag: E::lt(E::Pub(0), norm),
        hold_on_violation: true,
    };
    Ok((spec, vec![c; dims]))
}

// State: rounds since the last reading above threshold, saturating at cap.
fn bloodsugar_spec(p: &Params) -> Result<(Spec, Vec<u128>), CompileError> {
    let (a, b) = (p.window_start, p.window_end);
    if !(0 < a && a < b) {
        return Err(invalid(format!("window [{a}, {b}] needs 0 < start < end")));
    }
    if p.threshold >= p.max_reading {
        return Err(invalid("threshold must be below max_reading".into()));
    }
    let span = (b - a) as u128;
    let cap = span + 2;
    let exceed = E::lt(E::Const(p.threshold as u128), E::Obs(0));
    let s = E::State(0);
    let next = E::mux(
        exceed.clone(),
        E::Const(0),
        E::mux(E::eq(s.clone(), E::Const(cap)), E::Const(cap), E::add(s.clone(), E::Const(1))),
    );
    let recent = E::or(exceed, E::lt(s, E::Const(span)));
    let spec = Spec {
        state: vec![VarDecl::arith("since_exceed", 0, cap)],
        obs: vec![VarDecl::arith("reading", 0, p.max_reading as u128)],
        pubs: vec![PublicInput::RoundAtLeast(b)],
        next: vec![next],
        flag: E::and(recent, E::Pub(0)),
        hold_on_violation: false,
    };
    Ok((spec, vec![cap]))
}

fn acs_oracle(doors: usize, trace: &[Vec<u128>]) -> Vec<bool> {
    let (mut in_a, mut in_b) = (0i64, 0i64);
    trace
        .iter()
        .map(|obs| {
            let (mut a, mut b) = (in_a, in_b);
            for d in obs.chunks(4).take(doors) {
                a += d[0] as i64 - d[1] as i64;
                b += d[2] as i64 - d[3] as i64;
            }
            let flag = a < b;
            if !flag {
                (in_a, in_b) = (a, b);
            }
            flag
        })
        .collect()
}

fn locks_oracle(locks: usize, trace: &[Vec<u128>]) -> Vec<bool> {
    let mut locked = vec![false; locks];
    trace
        .iter()
        .map(|obs| {
            let mut flag = false;
            for (i, state) in locked.iter_mut().enumerate() {
                match (obs[2 * i], obs[2 * i + 1]) {
                    (1, _) if *state => flag = true,
                    (_, 1) if !*state => flag = true,
                    (1, _) => *state = true,
                    (_, 1) => *state = false,
                    _ => {}
                }
            }
            flag
        })
        .collect()
}

fn car_oracle(dims: usize, p: &Params, trace: &[Vec<u128>]) -> Vec<bool> {
    let mut pos = vec![0i64; dims];
    trace
        .iter()
        .enumerate()
        .map(|(t, obs)| {
            let moved: Vec<i64> = (0..dims)
                .map(|i| pos[i] + obs[2 * i] as i64 - obs[2 * i + 1] as i64)
                .collect();
            let r = (p.r_base + p.growth * t as u64).min(p.r_max) as i128;
            let norm: i128 = moved.iter().map(|&x| (x as i128) * (x as i128)).sum();
            let flag = norm > r * r;
            if !flag {
                pos = moved;
            }
            flag
        })
        .collect()
}

fn bloodsugar_oracle(p: &Params, trace: &[Vec<u128>]) -> Vec<bool> {
    let (a, b) = (p.window_start as usize, p.window_end as usize);
    (0..trace.len())
        .map(|t| {
            t >= b
                && trace[t - (b - a)..=t]
                    .iter()
                    .any(|x| x[0] > p.threshold as u128)
        })
        .collect()
}
