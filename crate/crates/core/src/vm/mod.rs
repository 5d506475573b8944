//! Typed register machine executed once per monitoring round.
//!
//! Programs are straight-line and in single-assignment form. Inputs (state,
//! observations, public per-round values, constants) are live on entry; the
//! `next` map names the registers carried into the following round.

mod check;
mod exec;
mod interp;
mod parse;

pub use check::{typecheck, CheckedProgram, Step, TypeError};
pub use exec::{cost_estimate, execute_round, RoundOutput};
pub use interp::interpret;
pub use parse::{parse_program, ParseError};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;
use crate::sharing::SType;

/// Register index.
pub type Reg = usize;

/// Comparison width used when an instruction does not give one.
pub const DEFAULT_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("ill-typed program:{}", .0.iter().map(|e| format!("\n  {e}")).collect::<String>())]
    Type(Vec<TypeError>),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("bad round input: {0}")]
    Input(String),
    #[error("instruction {index}: operand {value} does not fit in {width} bits")]
    Range { index: usize, value: u128, width: u32 },
}

/// LT/EQ operand: a register or a public literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Src {
    Reg(Reg),
    Const(u128),
}

impl fmt::Display for Src {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Src::Reg(r) => write!(f, "r{r}"),
            Src::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    AddC,
    Xor,
    And,
    Not,
    Lt,
    Eq,
    B2A,
    Reveal,
}

impl Opcode {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Mul => "MUL",
            Opcode::AddC => "ADDC",
            Opcode::Xor => "XOR",
            Opcode::And => "AND",
            Opcode::Not => "NOT",
            Opcode::Lt => "LT",
            Opcode::Eq => "EQ",
            Opcode::B2A => "B2A",
            Opcode::Reveal => "REVEAL",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Some(match s {
            "ADD" => Opcode::Add,
            "SUB" => Opcode::Sub,
            "MUL" => Opcode::Mul,
            "ADDC" => Opcode::AddC,
            "XOR" => Opcode::Xor,
            "AND" => Opcode::And,
            "NOT" => Opcode::Not,
            "LT" => Opcode::Lt,
            "EQ" => Opcode::Eq,
            "B2A" => Opcode::B2A,
            "REVEAL" => Opcode::Reveal,
            _ => return None,
        })
    }

    /// Whether the instruction needs communication.
    pub fn is_interactive(&self) -> bool {
        matches!(
            self,
            Opcode::Mul | Opcode::And | Opcode::Lt | Opcode::Eq | Opcode::B2A | Opcode::Reveal
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Add { dst: Reg, a: Reg, b: Reg },
    Sub { dst: Reg, a: Reg, b: Reg },
    Mul { dst: Reg, a: Reg, b: Reg },
    /// `dst = a + c`; negative `c` is reduced into the domain.
    AddC { dst: Reg, a: Reg, c: i128 },
    Xor { dst: Reg, a: Reg, b: Reg },
    And { dst: Reg, a: Reg, b: Reg },
    Not { dst: Reg, a: Reg },
    Lt { dst: Reg, a: Src, b: Src, width: u32 },
    Eq { dst: Reg, a: Src, b: Src, width: u32 },
    B2A { dst: Reg, a: Reg },
    /// Opens `a` into the flag register `dst`.
    Reveal { dst: Reg, a: Reg },
}

impl Instruction {
    pub fn opcode(&self) -> Opcode {
        match self {
            Instruction::Add { .. } => Opcode::Add,
            Instruction::Sub { .. } => Opcode::Sub,
            Instruction::Mul { .. } => Opcode::Mul,
            Instruction::AddC { .. } => Opcode::AddC,
            Instruction::Xor { .. } => Opcode::Xor,
            Instruction::And { .. } => Opcode::And,
            Instruction::Not { .. } => Opcode::Not,
            Instruction::Lt { .. } => Opcode::Lt,
            Instruction::Eq { .. } => Opcode::Eq,
            Instruction::B2A { .. } => Opcode::B2A,
            Instruction::Reveal { .. } => Opcode::Reveal,
        }
    }

    pub fn dst(&self) -> Reg {
        match *self {
            Instruction::Add { dst, .. }
            | Instruction::Sub { dst, .. }
            | Instruction::Mul { dst, .. }
            | Instruction::AddC { dst, .. }
            | Instruction::Xor { dst, .. }
            | Instruction::And { dst, .. }
            | Instruction::Not { dst, .. }
            | Instruction::Lt { dst, .. }
            | Instruction::Eq { dst, .. }
            | Instruction::B2A { dst, .. }
            | Instruction::Reveal { dst, .. } => dst,
        }
    }

    /// Source registers with the type each must have.
    pub fn operands(&self) -> Vec<(Reg, SType)> {
        use SType::{Arith, Bool};
        match *self {
            Instruction::Add { a, b, .. } | Instruction::Sub { a, b, .. } | Instruction::Mul { a, b, .. } => {
                vec![(a, Arith), (b, Arith)]
            }
            Instruction::AddC { a, .. } => vec![(a, Arith)],
            Instruction::Xor { a, b, .. } | Instruction::And { a, b, .. } => vec![(a, Bool), (b, Bool)],
            Instruction::Not { a, .. } | Instruction::B2A { a, .. } | Instruction::Reveal { a, .. } => {
                vec![(a, Bool)]
            }
            Instruction::Lt { a, b, .. } | Instruction::Eq { a, b, .. } => [a, b]
                .into_iter()
                .filter_map(|s| match s {
                    Src::Reg(r) => Some((r, Arith)),
                    Src::Const(_) => None,
                })
                .collect(),
        }
    }

    pub fn result_type(&self) -> SType {
        match self.opcode() {
            Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::AddC | Opcode::B2A => SType::Arith,
            _ => SType::Bool,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = self.opcode().mnemonic();
        match *self {
            Instruction::Add { dst, a, b }
            | Instruction::Sub { dst, a, b }
            | Instruction::Mul { dst, a, b }
            | Instruction::Xor { dst, a, b }
            | Instruction::And { dst, a, b } => write!(f, "{op} r{dst} r{a} r{b}"),
            Instruction::AddC { dst, a, c } => write!(f, "{op} r{dst} r{a} {c}"),
            Instruction::Not { dst, a } | Instruction::B2A { dst, a } | Instruction::Reveal { dst, a } => {
                write!(f, "{op} r{dst} r{a}")
            }
            Instruction::Lt { dst, a, b, width } | Instruction::Eq { dst, a, b, width } => {
                write!(f, "{op} r{dst} {a} {b} #{width}")
            }
        }
    }
}

/// Public value recomputed by every party from the round index alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PublicInput {
    /// The zero-based round index.
    Round,
    /// Bool: round index `>= n`.
    RoundAtLeast(u64),
    /// Arith: `min(base + growth * t, max)^2`.
    RadiusSq { base: u64, growth: u64, max: u64 },
}

impl PublicInput {
    pub fn stype(&self) -> SType {
        match self {
            PublicInput::RoundAtLeast(_) => SType::Bool,
            _ => SType::Arith,
        }
    }

    pub fn eval(&self, t: u64) -> u128 {
        match *self {
            PublicInput::Round => t as u128,
            PublicInput::RoundAtLeast(n) => (t >= n) as u128,
            PublicInput::RadiusSq { base, growth, max } => {
                let r = (base as u128)
                    .saturating_add((growth as u128).saturating_mul(t as u128))
                    .min(max as u128);
                r * r
            }
        }
    }
}

impl fmt::Display for PublicInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PublicInput::Round => write!(f, "round"),
            PublicInput::RoundAtLeast(n) => write!(f, "round_at_least {n}"),
            PublicInput::RadiusSq { base, growth, max } => write!(f, "radius_sq {base} {growth} {max}"),
        }
    }
}

/// A monitor program: declarations plus one round's instructions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub regs: BTreeMap<Reg, SType>,
    pub state: Vec<Reg>,
    pub obs: Vec<Reg>,
    pub pubs: Vec<(Reg, PublicInput)>,
    pub consts: Vec<(Reg, u128)>,
    /// `(state register, register holding its next-round value)`.
    pub next: Vec<(Reg, Reg)>,
    pub flag: Option<Reg>,
    pub body: Vec<Instruction>,
}

impl Program {
    pub fn stype(&self, r: Reg) -> Option<SType> {
        self.regs.get(&r).copied()
    }

    pub fn state_types(&self) -> Vec<SType> {
        self.state.iter().map(|r| self.regs[r]).collect()
    }

    pub fn obs_types(&self) -> Vec<SType> {
        self.obs.iter().map(|r| self.regs[r]).collect()
    }
}

fn reg_list(f: &mut fmt::Formatter<'_>, key: &str, regs: &[Reg]) -> fmt::Result {
    if regs.is_empty() {
        return Ok(());
    }
    write!(f, "{key}")?;
    for r in regs {
        write!(f, " r{r}")?;
    }
    writeln!(f)
}

/// The canonical text form accepted by [`parse_program`].
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, t) in &self.regs {
            writeln!(f, "reg r{r} {t}")?;
        }
        reg_list(f, "state", &self.state)?;
        reg_list(f, "obs", &self.obs)?;
        for (r, p) in &self.pubs {
            writeln!(f, "pub r{r} {p}")?;
        }
        for (r, c) in &self.consts {
            writeln!(f, "const r{r} {c}")?;
        }
        for (s, n) in &self.next {
            writeln!(f, "next r{s} r{n}")?;
        }
        if let Some(flag) = self.flag {
            writeln!(f, "flag r{flag}")?;
        }
        for i in &self.body {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}
