use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Instruction, Opcode, Program, Reg, Src, VmError};
use crate::engine::{CmpOp, StageShape};
use crate::sharing::SType;

/// Comparison widths the engine can handle in any domain.
const MAX_WIDTH: u32 = 127;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeError {
    /// Instruction index, or `None` for declarations.
    pub at: Option<usize>,
    pub message: String,
    pub expected: Option<SType>,
    pub actual: Option<SType>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.at {
            Some(i) => write!(f, "instruction {i}: ")?,
            None => write!(f, "declarations: ")?,
        }
        write!(f, "{}", self.message)?;
        if let (Some(e), Some(a)) = (self.expected, self.actual) {
            write!(f, " (expected {e}, found {a})")?;
        }
        Ok(())
    }
}

/// One scheduling step: local instructions whose operands are ready, then
/// one batch of interactive instructions executed as a single engine stage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Step {
    pub locals: Vec<usize>,
    pub interactive: Vec<usize>,
}

/// A program that passed [`typecheck`], with its execution schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedProgram {
    program: Program,
    steps: Vec<Step>,
    flag: Reg,
    reg_count: usize,
    carry: Vec<Reg>,
}

impl CheckedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn flag(&self) -> Reg {
        self.flag
    }

    /// Source of each state register's next value, in `state` order.
    pub fn carry(&self) -> &[Reg] {
        &self.carry
    }

    /// One past the highest register index.
    pub fn reg_count(&self) -> usize {
        self.reg_count
    }

    /// Shapes of the engine stages, one per step with interactive work.
    pub fn stage_shapes(&self) -> Vec<StageShape> {
        self.steps
            .iter()
            .filter(|s| !s.interactive.is_empty())
            .map(|s| {
                let mut shape = StageShape::default();
                for &i in &s.interactive {
                    match self.program.body[i] {
                        Instruction::Mul { .. } => shape.muls += 1,
                        Instruction::And { .. } => shape.ands += 1,
                        Instruction::B2A { .. } => shape.b2a += 1,
                        Instruction::Reveal { .. } => shape.reveals += 1,
                        Instruction::Lt { width, .. } => shape.cmps.push((CmpOp::Lt, width)),
                        Instruction::Eq { width, .. } => shape.cmps.push((CmpOp::Eq, width)),
                        _ => unreachable!("local instruction scheduled as interactive"),
                    }
                }
                shape
            })
            .collect()
    }
}

struct Checker<'a> {
    p: &'a Program,
    errors: Vec<TypeError>,
}

impl Checker<'_> {
    fn err(&mut self, at: Option<usize>, message: String) {
        self.errors.push(TypeError {
            at,
            message,
            expected: None,
            actual: None,
        });
    }

    fn mismatch(&mut self, at: Option<usize>, message: String, expected: SType, actual: SType) {
        self.errors.push(TypeError {
            at,
            message,
            expected: Some(expected),
            actual: Some(actual),
        });
    }

    fn declared(&mut self, at: Option<usize>, r: Reg) -> Option<SType> {
        let t = self.p.stype(r);
        if t.is_none() {
            self.err(at, format!("r{r} is not declared"));
        }
        t
    }

    fn expect(&mut self, at: Option<usize>, r: Reg, want: SType, what: &str) {
        if let Some(t) = self.declared(at, r) {
            if t != want {
                self.mismatch(at, format!("{what} r{r}"), want, t);
            }
        }
    }
}

/// Checks declarations, operand types, single assignment, read-after-write
/// and the flag discipline, and derives the execution schedule.
pub fn typecheck(p: &Program) -> Result<CheckedProgram, VmError> {
    let mut c = Checker {
        p,
        errors: Vec::new(),
    };
    // level[r]: engine stages that must run before r is available
    let mut level: BTreeMap<Reg, usize> = BTreeMap::new();
    let mut inputs = BTreeSet::new();

    let mut input = |c: &mut Checker, r: Reg, role: &str, want: Option<SType>| {
        if let (Some(t), Some(w)) = (c.declared(None, r), want) {
            if t != w {
                c.mismatch(None, format!("{role} r{r}"), w, t);
            }
        }
        if !inputs.insert(r) {
            c.err(None, format!("r{r} bound as input more than once"));
        }
        level.insert(r, 0);
    };
    for &r in &p.state {
        input(&mut c, r, "state", None);
    }
    for &r in &p.obs {
        input(&mut c, r, "observation", None);
    }
    for &(r, pi) in &p.pubs {
        input(&mut c, r, "public input", Some(pi.stype()));
    }
    for &(r, v) in &p.consts {
        input(&mut c, r, "constant", None);
        if p.stype(r) == Some(SType::Bool) && v > 1 {
            c.err(None, format!("bool constant r{r} = {v}"));
        }
    }

    let mut steps: Vec<Step> = Vec::new();
    let mut reveals = 0;
    for (i, ins) in p.body.iter().enumerate() {
        let at = Some(i);
        let op = ins.opcode();
        let mut ready = 0;
        for (r, want) in ins.operands() {
            c.expect(at, r, want, &format!("{} operand", op.mnemonic()));
            match level.get(&r) {
                Some(&l) => ready = ready.max(l),
                None => c.err(at, format!("r{r} read before it is written")),
            }
        }
        if let Instruction::Lt { a, b, width, .. } | Instruction::Eq { a, b, width, .. } = *ins {
            if width == 0 || width > MAX_WIDTH {
                c.err(at, format!("width {width} outside 1..={MAX_WIDTH}"));
            }
            for s in [a, b] {
                if let Src::Const(v) = s {
                    if width <= MAX_WIDTH && v >> width != 0 {
                        c.err(at, format!("literal {v} does not fit in {width} bits"));
                    }
                }
            }
            if matches!((a, b), (Src::Const(_), Src::Const(_))) {
                c.err(at, "comparison of two literals".into());
            }
        }
        let dst = ins.dst();
        c.expect(at, dst, ins.result_type(), &format!("{} result", op.mnemonic()));
        if op == Opcode::Reveal {
            reveals += 1;
            if p.flag != Some(dst) {
                c.err(at, format!("REVEAL targets r{dst}, which is not the flag register"));
            }
        }
        if inputs.contains(&dst) {
            c.err(at, format!("input register r{dst} is overwritten"));
        } else if level.contains_key(&dst) {
            c.err(at, format!("r{dst} is written twice"));
        }
        let out = if op.is_interactive() { ready + 1 } else { ready };
        level.insert(dst, out);
        if steps.len() <= ready {
            steps.resize_with(ready + 1, Step::default);
        }
        if op.is_interactive() {
            steps[ready].interactive.push(i);
        } else {
            steps[ready].locals.push(i);
        }
    }

    match p.flag {
        None => c.err(None, "no flag register declared".into()),
        Some(f) => {
            c.expect(None, f, SType::Bool, "flag");
            if reveals == 0 {
                c.err(None, format!("flag r{f} is never revealed"));
            }
        }
    }
    if reveals > 1 {
        c.err(None, format!("{reveals} REVEAL instructions; exactly one is allowed"));
    }

    let mut carried = BTreeSet::new();
    for &(s, n) in &p.next {
        if !p.state.contains(&s) {
            c.err(None, format!("next names r{s}, which is not a state register"));
        }
        if !carried.insert(s) {
            c.err(None, format!("state r{s} carried twice"));
        }
        if !level.contains_key(&n) {
            c.err(None, format!("next value r{n} of r{s} is never written"));
        }
        if let (Some(ts), Some(tn)) = (p.stype(s), p.stype(n)) {
            if ts != tn {
                c.mismatch(None, format!("next value r{n} of state r{s}"), ts, tn);
            }
        }
    }
    for &s in &p.state {
        if !carried.contains(&s) {
            c.err(None, format!("state r{s} has no next value"));
        }
    }

    if !c.errors.is_empty() {
        return Err(VmError::Type(c.errors));
    }
    let reg_count = p.regs.keys().next_back().map_or(0, |r| r + 1);
    let carry_map: BTreeMap<Reg, Reg> = p.next.iter().copied().collect();
    Ok(CheckedProgram {
        carry: p.state.iter().map(|s| carry_map[s]).collect(),
        program: p.clone(),
        steps,
        flag: p.flag.expect("checked above"),
        reg_count,
    })
}
