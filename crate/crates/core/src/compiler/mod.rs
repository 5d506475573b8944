//! Lowers monitor specifications, a next-state function per state variable
//! and a flag predicate, to typechecked VM programs.

pub mod scenarios;

pub use scenarios::{
    build_acs, build_bloodsugar, build_car, build_locks, oracle_flags, Params, Scenario, ScenarioConfig, ScenarioKind,
};

use std::collections::HashMap;

use thiserror::Error;

use crate::algebra::Modulus;
use crate::engine::{comparison_mode, EngineError};
use crate::sharing::SType;
use crate::vm::{typecheck, CheckedProgram, Instruction, Program, PublicInput, Reg, Src, VmError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("type error: {0}")]
    Type(String),
    #[error("range error: {0}")]
    Range(String),
    #[error(transparent)]
    Width(#[from] EngineError),
    #[error(transparent)]
    Vm(#[from] VmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SpecExpr {
    State(usize),
    Obs(usize),
    Pub(usize),
    Const(u128),
    Bit(bool),
    Add(Box<SpecExpr>, Box<SpecExpr>),
    Sum(Vec<SpecExpr>),
    /// Guarded: the declared ranges must prove `a >= b`.
    Sub(Box<SpecExpr>, Box<SpecExpr>),
    Mul(Box<SpecExpr>, Box<SpecExpr>),
    /// `(a - b)^2`, which is nonnegative whatever the sign of `a - b`.
    SqDiff(Box<SpecExpr>, Box<SpecExpr>),
    Lt(Box<SpecExpr>, Box<SpecExpr>),
    Le(Box<SpecExpr>, Box<SpecExpr>),
    Eq(Box<SpecExpr>, Box<SpecExpr>),
    And(Box<SpecExpr>, Box<SpecExpr>),
    Or(Box<SpecExpr>, Box<SpecExpr>),
    Xor(Box<SpecExpr>, Box<SpecExpr>),
    /// OR of all operands, evaluated as a balanced tree.
    Any(Vec<SpecExpr>),
    Not(Box<SpecExpr>),
    /// `cond ? then : else`.
    Mux(Box<SpecExpr>, Box<SpecExpr>, Box<SpecExpr>),
}

macro_rules! binary {
    ($($name:ident => $variant:ident),*) => {
        $(#[allow(clippy::should_implement_trait)]
        pub fn $name(a: SpecExpr, b: SpecExpr) -> SpecExpr {
            SpecExpr::$variant(Box::new(a), Box::new(b))
        })*
    };
}

impl SpecExpr {
    binary!(add => Add, sub => Sub, mul => Mul, sq_diff => SqDiff, lt => Lt, le => Le,
            eq => Eq, and => And, or => Or, xor => Xor);

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: SpecExpr) -> SpecExpr {
        SpecExpr::Not(Box::new(a))
    }

    pub fn mux(c: SpecExpr, then: SpecExpr, otherwise: SpecExpr) -> SpecExpr {
        SpecExpr::Mux(Box::new(c), Box::new(then), Box::new(otherwise))
    }

    /// Direct evaluation over `modulus`; Bool results are 0 or 1.
    pub fn eval(&self, env: &Env<'_>) -> u128 {
        use SpecExpr::*;
        let m = env.modulus;
        let b = |e: &SpecExpr| e.eval(env) == 1;
        match self {
            State(i) => env.state[*i],
            Obs(i) => env.obs[*i],
            Pub(i) => m.reduce(env.pubs[*i]),
            Const(c) => m.reduce(*c),
            Bit(v) => *v as u128,
            Add(x, y) => m.add(x.eval(env), y.eval(env)),
            Sum(v) => v.iter().fold(0, |acc, e| m.add(acc, e.eval(env))),
            Sub(x, y) => m.sub(x.eval(env), y.eval(env)),
            Mul(x, y) => m.mul(x.eval(env), y.eval(env)),
            SqDiff(x, y) => {
                let d = m.sub(x.eval(env), y.eval(env));
                m.mul(d, d)
            }
            Lt(x, y) => (x.eval(env) < y.eval(env)) as u128,
            Le(x, y) => (x.eval(env) <= y.eval(env)) as u128,
            Eq(x, y) => (x.eval(env) == y.eval(env)) as u128,
            And(x, y) => (b(x) & b(y)) as u128,
            Or(x, y) => (b(x) | b(y)) as u128,
            Xor(x, y) => (b(x) ^ b(y)) as u128,
            Any(v) => v.iter().any(b) as u128,
            Not(x) => !b(x) as u128,
            Mux(c, t, e) => {
                if b(c) {
                    t.eval(env)
                } else {
                    e.eval(env)
                }
            }
        }
    }
}

/// Variable bindings for [`SpecExpr::eval`].
pub struct Env<'a> {
    pub modulus: Modulus,
    pub state: &'a [u128],
    pub obs: &'a [u128],
    pub pubs: &'a [u128],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub stype: SType,
    /// Inclusive value range; ignored for Bool.
    pub min: u128,
    pub max: u128,
}

impl VarDecl {
    pub fn arith(name: impl Into<String>, min: u128, max: u128) -> Self {
        VarDecl {
            name: name.into(),
            stype: SType::Arith,
            min,
            max,
        }
    }

    pub fn boolean(name: impl Into<String>) -> Self {
        VarDecl {
            name: name.into(),
            stype: SType::Bool,
            min: 0,
            max: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spec {
    pub state: Vec<VarDecl>,
    pub obs: Vec<VarDecl>,
    pub pubs: Vec<PublicInput>,
    /// Next-state expression per state variable.
    pub next: Vec<SpecExpr>,
    pub flag: SpecExpr,
    /// Keep the previous state in rounds that raise the flag.
    pub hold_on_violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub modulus: Modulus,
    /// Minimum comparison width. Each comparison gets the larger of this and
    /// the smallest width its operand ranges allow.
    pub cmp_width: Option<u32>,
}

/// Inclusive bounds of an arithmetic value, or `None` once it may wrap.
type Range = Option<(u128, u128)>;

struct Lowering<'a> {
    spec: &'a Spec,
    opts: CompileOptions,
    prog: Program,
    next_reg: Reg,
    memo: HashMap<SpecExpr, (Reg, SType, Range)>,
    consts: HashMap<(SType, u128), Reg>,
    b2a: HashMap<Reg, Reg>,
}

fn bits_for(v: u128) -> u32 {
    (128 - v.leading_zeros()).max(1)
}

impl Lowering<'_> {
    fn fresh(&mut self, t: SType) -> Reg {
        let r = self.next_reg;
        self.next_reg += 1;
        self.prog.regs.insert(r, t);
        r
    }

    fn emit(&mut self, t: SType, make: impl FnOnce(Reg) -> Instruction) -> Reg {
        let r = self.fresh(t);
        self.prog.body.push(make(r));
        r
    }

    fn konst(&mut self, t: SType, v: u128) -> Reg {
        if let Some(&r) = self.consts.get(&(t, v)) {
            return r;
        }
        let r = self.fresh(t);
        self.prog.consts.push((r, v));
        self.consts.insert((t, v), r);
        r
    }

    /// Range after reduction: `None` if `v` may reach the modulus.
    fn fit(&self, lo: Option<u128>, hi: Option<u128>) -> Range {
        let (lo, hi) = (lo?, hi?);
        match self.opts.modulus.order() {
            Some(order) if hi >= order => None,
            _ => Some((lo, hi)),
        }
    }

    fn arith(&mut self, e: &SpecExpr) -> Result<(Reg, Range), CompileError> {
        match self.lower(e)? {
            (r, SType::Arith, range) => Ok((r, range)),
            _ => Err(CompileError::Type(format!("expected arithmetic operand: {e:?}"))),
        }
    }

    fn boolean(&mut self, e: &SpecExpr) -> Result<Reg, CompileError> {
        match self.lower(e)? {
            (r, SType::Bool, _) => Ok(r),
            _ => Err(CompileError::Type(format!("expected Boolean operand: {e:?}"))),
        }
    }

    fn bounded(range: Range, e: &SpecExpr) -> Result<(u128, u128), CompileError> {
        range.ok_or_else(|| CompileError::Range(format!("unbounded value compared: {e:?}")))
    }

    fn cmp_src(&mut self, e: &SpecExpr) -> Result<(Src, u128), CompileError> {
        if let SpecExpr::Const(c) = e {
            return Ok((Src::Const(*c), *c));
        }
        let (r, range) = self.arith(e)?;
        Ok((Src::Reg(r), Self::bounded(range, e)?.1))
    }

    fn width(&self, hi: u128) -> Result<u32, CompileError> {
        let w = bits_for(hi).max(self.opts.cmp_width.unwrap_or(1));
        comparison_mode(self.opts.modulus, w)?;
        Ok(w)
    }

    fn compare(&mut self, eq: bool, a: &SpecExpr, b: &SpecExpr) -> Result<Reg, CompileError> {
        let (sa, ha) = self.cmp_src(a)?;
        let (sb, hb) = self.cmp_src(b)?;
        if let (Src::Const(x), Src::Const(y)) = (sa, sb) {
            let v = if eq { x == y } else { x < y };
            return Ok(self.konst(SType::Bool, v as u128));
        }
        let width = self.width(ha.max(hb))?;
        Ok(self.emit(SType::Bool, |dst| {
            if eq {
                Instruction::Eq { dst, a: sa, b: sb, width }
            } else {
                Instruction::Lt { dst, a: sa, b: sb, width }
            }
        }))
    }

    fn not(&mut self, r: Reg) -> Reg {
        self.emit(SType::Bool, |dst| Instruction::Not { dst, a: r })
    }

    fn or(&mut self, a: Reg, b: Reg) -> Reg {
        let (na, nb) = (self.not(a), self.not(b));
        let both = self.emit(SType::Bool, |dst| Instruction::And { dst, a: na, b: nb });
        self.not(both)
    }

    fn as_arith(&mut self, c: Reg) -> Reg {
        if let Some(&r) = self.b2a.get(&c) {
            return r;
        }
        let r = self.emit(SType::Arith, |dst| Instruction::B2A { dst, a: c });
        self.b2a.insert(c, r);
        r
    }

    fn lower(&mut self, e: &SpecExpr) -> Result<(Reg, SType, Range), CompileError> {
        if let Some(&hit) = self.memo.get(e) {
            return Ok(hit);
        }
        use SpecExpr::*;
        use SType::{Arith, Bool};
        let out = match e {
            State(i) | Obs(i) => {
                let (regs, decls) = match e {
                    State(_) => (&self.prog.state, &self.spec.state),
                    _ => (&self.prog.obs, &self.spec.obs),
                };
                let d = decls
                    .get(*i)
                    .ok_or_else(|| CompileError::Type(format!("no variable for {e:?}")))?;
                let range = self.fit(Some(d.min), Some(d.max));
                (regs[*i], d.stype, range)
            }
            Pub(i) => {
                let &(r, p) = self
                    .prog
                    .pubs
                    .get(*i)
                    .ok_or_else(|| CompileError::Type(format!("no public input {i}")))?;
                let range = match p {
                    PublicInput::Round => self.fit(Some(0), Some(u64::MAX as u128)),
                    PublicInput::RadiusSq { max, .. } => self.fit(Some(0), Some(max as u128 * max as u128)),
                    PublicInput::RoundAtLeast(_) => None,
                };
                (r, p.stype(), range)
            }
            Const(c) => {
                let range = self.fit(Some(*c), Some(*c));
                (self.konst(Arith, *c), Arith, range)
            }
            Bit(v) => (self.konst(Bool, *v as u128), Bool, None),
            Add(a, b) => {
                let (ra, xa) = self.arith(a)?;
                let range = |xb: Range, s: &Self| {
                    let ((la, ha), (lb, hb)) = (xa?, xb?);
                    s.fit(la.checked_add(lb), ha.checked_add(hb))
                };
                if let Const(c) = **b {
                    let c_i = i128::try_from(c).map_err(|_| CompileError::Range(format!("constant {c}")))?;
                    let r = self.emit(Arith, |dst| Instruction::AddC { dst, a: ra, c: c_i });
                    (r, Arith, range(Some((c, c)), self))
                } else {
                    let (rb, xb) = self.arith(b)?;
                    let r = self.emit(Arith, |dst| Instruction::Add { dst, a: ra, b: rb });
                    (r, Arith, range(xb, self))
                }
            }
            Sum(v) => match v.split_first() {
                None => return self.lower(&Const(0)),
                Some((first, rest)) => {
                    let (mut acc, mut range) = self.arith(first)?;
                    for t in rest {
                        let (r, x) = self.arith(t)?;
                        acc = self.emit(Arith, |dst| Instruction::Add { dst, a: acc, b: r });
                        range = match (range, x) {
                            (Some((la, ha)), Some((lb, hb))) => self.fit(la.checked_add(lb), ha.checked_add(hb)),
                            _ => None,
                        };
                    }
                    (acc, Arith, range)
                }
            },
            Sub(a, b) => {
                let (ra, xa) = self.arith(a)?;
                let (xb, r) = if let Const(c) = **b {
                    let c_i = i128::try_from(c).map_err(|_| CompileError::Range(format!("constant {c}")))?;
                    (Some((c, c)), self.emit(Arith, |dst| Instruction::AddC { dst, a: ra, c: -c_i }))
                } else {
                    let (rb, xb) = self.arith(b)?;
                    (xb, self.emit(Arith, |dst| Instruction::Sub { dst, a: ra, b: rb }))
                };
                let range = match (xa, xb) {
                    (Some((la, ha)), Some((lb, hb))) if la >= hb => Some((la - hb, ha - lb)),
                    _ => {
                        return Err(CompileError::Range(format!(
                            "subtraction may go negative: {e:?}"
                        )))
                    }
                };
                (r, Arith, range)
            }
            Mul(a, b) => {
                let (ra, xa) = self.arith(a)?;
                let (rb, xb) = self.arith(b)?;
                let r = self.emit(Arith, |dst| Instruction::Mul { dst, a: ra, b: rb });
                let range = match (xa, xb) {
                    (Some((la, ha)), Some((lb, hb))) => self.fit(la.checked_mul(lb), ha.checked_mul(hb)),
                    _ => None,
                };
                (r, Arith, range)
            }
            SqDiff(a, b) => {
                let (ra, xa) = self.arith(a)?;
                let (d, xb) = if let Const(c) = **b {
                    let c_i = i128::try_from(c).map_err(|_| CompileError::Range(format!("constant {c}")))?;
                    (self.emit(Arith, |dst| Instruction::AddC { dst, a: ra, c: -c_i }), Some((c, c)))
                } else {
                    let (rb, xb) = self.arith(b)?;
                    (self.emit(Arith, |dst| Instruction::Sub { dst, a: ra, b: rb }), xb)
                };
                let r = self.emit(Arith, |dst| Instruction::Mul { dst, a: d, b: d });
                let range = match (xa, xb) {
                    (Some((la, ha)), Some((lb, hb))) => {
                        let span = ha.saturating_sub(lb).max(hb.saturating_sub(la));
                        self.fit(Some(0), span.checked_mul(span))
                    }
                    _ => None,
                };
                (r, Arith, range)
            }
            Lt(a, b) => (self.compare(false, a, b)?, Bool, None),
            Le(a, b) => {
                let gt = self.compare(false, b, a)?;
                (self.not(gt), Bool, None)
            }
            Eq(a, b) => (self.compare(true, a, b)?, Bool, None),
            And(a, b) | Or(a, b) | Xor(a, b) => {
                let (ra, rb) = (self.boolean(a)?, self.boolean(b)?);
                let r = match e {
                    And(..) => self.emit(Bool, |dst| Instruction::And { dst, a: ra, b: rb }),
                    Or(..) => self.or(ra, rb),
                    _ => self.emit(Bool, |dst| Instruction::Xor { dst, a: ra, b: rb }),
                };
                (r, Bool, None)
            }
            Any(v) => {
                let mut layer = v.iter().map(|t| self.boolean(t)).collect::<Result<Vec<_>, _>>()?;
                if layer.is_empty() {
                    return self.lower(&Bit(false));
                }
                while layer.len() > 1 {
                    let mut next = Vec::with_capacity(layer.len().div_ceil(2));
                    for pair in layer.chunks(2) {
                        next.push(match *pair {
                            [a, b] => self.or(a, b),
                            [a] => a,
                            _ => unreachable!(),
                        });
                    }
                    layer = next;
                }
                (layer[0], Bool, None)
            }
            Not(a) => {
                let ra = self.boolean(a)?;
                (self.not(ra), Bool, None)
            }
            Mux(c, t, f) => {
                let rc = self.boolean(c)?;
                let (rt, tt, xt) = self.lower(t)?;
                let (rf, tf, xf) = self.lower(f)?;
                if tt != tf {
                    return Err(CompileError::Type(format!("mux branches differ in type: {e:?}")));
                }
                match tt {
                    // f + c * (t - f)
                    Arith => {
                        let ca = self.as_arith(rc);
                        let d = self.emit(Arith, |dst| Instruction::Sub { dst, a: rt, b: rf });
                        let p = self.emit(Arith, |dst| Instruction::Mul { dst, a: ca, b: d });
                        let r = self.emit(Arith, |dst| Instruction::Add { dst, a: rf, b: p });
                        let range = match (xt, xf) {
                            (Some((lt, ht)), Some((lf, hf))) => Some((lt.min(lf), ht.max(hf))),
                            _ => None,
                        };
                        (r, Arith, range)
                    }
                    // f ^ (c & (t ^ f))
                    Bool => {
                        let d = self.emit(Bool, |dst| Instruction::Xor { dst, a: rt, b: rf });
                        let p = self.emit(Bool, |dst| Instruction::And { dst, a: rc, b: d });
                        let r = self.emit(Bool, |dst| Instruction::Xor { dst, a: rf, b: p });
                        (r, Bool, None)
                    }
                }
            }
        };
        self.memo.insert(e.clone(), out);
        Ok(out)
    }
}

/// Compiles `spec` to a typechecked program. Registers are numbered state
/// first, then observations, then public inputs, then temporaries.
pub fn compile(spec: &Spec, opts: &CompileOptions) -> Result<CheckedProgram, CompileError> {
    if spec.next.len() != spec.state.len() {
        return Err(CompileError::Type(format!(
            "{} next-state expressions for {} state variables",
            spec.next.len(),
            spec.state.len()
        )));
    }
    let mut l = Lowering {
        spec,
        opts: *opts,
        prog: Program::default(),
        next_reg: 0,
        memo: HashMap::new(),
        consts: HashMap::new(),
        b2a: HashMap::new(),
    };
    for d in &spec.state {
        let r = l.fresh(d.stype);
        l.prog.state.push(r);
    }
    for d in &spec.obs {
        let r = l.fresh(d.stype);
        l.prog.obs.push(r);
    }
    for p in &spec.pubs {
        let r = l.fresh(p.stype());
        l.prog.pubs.push((r, *p));
    }

    let violation = l.boolean(&spec.flag)?;
    let flag = l.fresh(SType::Bool);
    l.prog.body.push(Instruction::Reveal { dst: flag, a: violation });
    l.prog.flag = Some(flag);

    for (i, (e, d)) in spec.next.iter().zip(&spec.state).enumerate() {
        let e = if spec.hold_on_violation {
            SpecExpr::mux(spec.flag.clone(), SpecExpr::State(i), e.clone())
        } else {
            e.clone()
        };
        let (r, t, _) = l.lower(&e)?;
        if t != d.stype {
            return Err(CompileError::Type(format!("next value of {} has type {t}", d.name)));
        }
        let s = l.prog.state[i];
        l.prog.next.push((s, r));
    }
    Ok(typecheck(&l.prog)?)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::SpecExpr as E;
    use super::*;
    use crate::vm::{interpret, Opcode};

    fn opts() -> CompileOptions {
        CompileOptions {
            modulus: Modulus::default_prime(),
            cmp_width: None,
        }
    }

    fn small_spec(next: Vec<E>, flag: E) -> Spec {
        Spec {
            state: vec![VarDecl::arith("s0", 0, 15), VarDecl::arith("s1", 0, 15)],
            obs: vec![VarDecl::arith("x0", 0, 15), VarDecl::arith("x1", 0, 15)],
            pubs: vec![],
            next,
            flag,
            hold_on_violation: false,
        }
    }

    fn opcodes(p: &CheckedProgram) -> Vec<Opcode> {
        p.program().body.iter().map(|i| i.opcode()).collect()
    }

    #[test]
    fn comparison_predicate_is_two_instructions() {
        let spec = Spec {
            state: vec![VarDecl::arith("mu", 0, 255)],
            obs: vec![VarDecl::arith("x", 0, 255)],
            pubs: vec![],
            next: vec![E::State(0)],
            flag: E::lt(E::State(0), E::Obs(0)),
            hold_on_violation: false,
        };
        let p = compile(&spec, &opts()).unwrap();
        assert_eq!(opcodes(&p), vec![Opcode::Lt, Opcode::Reveal]);
    }

    #[test]
    fn accumulation_is_one_add_and_may_wrap() {
        let spec = Spec {
            state: vec![VarDecl::arith("mu", 0, 255)],
            obs: vec![VarDecl::arith("x", 0, 255)],
            pubs: vec![],
            next: vec![E::add(E::State(0), E::Obs(0))],
            flag: E::Bit(false),
            hold_on_violation: false,
        };
        let o = CompileOptions {
            modulus: Modulus::power_of_two(8).unwrap(),
            cmp_width: None,
        };
        let p = compile(&spec, &o).unwrap();
        assert_eq!(opcodes(&p), vec![Opcode::Reveal, Opcode::Add]);
        let out = interpret(&p, o.modulus, &[10], &[5], 0).unwrap();
        assert_eq!(out.next_state, vec![15]);
        // comparing the wrapped sum is refused
        let spec = Spec {
            flag: E::lt(E::add(E::State(0), E::Obs(0)), E::Const(7)),
            ..spec
        };
        assert!(matches!(compile(&spec, &o), Err(CompileError::Range(_))));
    }

    #[test]
    fn conjunction_lowers_to_lt_eq_and() {
        let spec = Spec {
            state: vec![VarDecl::arith("mu", 0, 1000)],
            obs: vec![VarDecl::arith("x", 0, 1000)],
            pubs: vec![],
            next: vec![E::State(0)],
            flag: E::and(E::lt(E::Const(100), E::Obs(0)), E::eq(E::State(0), E::Const(5))),
            hold_on_violation: false,
        };
        let p = compile(&spec, &opts()).unwrap();
        assert_eq!(opcodes(&p), vec![Opcode::Lt, Opcode::Eq, Opcode::And, Opcode::Reveal]);
        assert!(interpret(&p, opts().modulus, &[5], &[150], 0).unwrap().flag);
    }

    #[test]
    fn guarded_subtraction_and_widths() {
        let spec = small_spec(vec![E::sub(E::State(0), E::Obs(0)), E::State(1)], E::Bit(false));
        assert!(matches!(compile(&spec, &opts()), Err(CompileError::Range(_))));
        let spec = small_spec(
            vec![E::State(0), E::State(1)],
            E::lt(E::mul(E::State(0), E::Obs(0)), E::Obs(1)),
        );
        let p = compile(&spec, &opts()).unwrap();
        assert!(p.program().body.iter().any(|i| matches!(i, Instruction::Lt { width: 8, .. })));
        let wide = CompileOptions {
            cmp_width: Some(32),
            ..opts()
        };
        let p = compile(&spec, &wide).unwrap();
        assert!(p.program().body.iter().any(|i| matches!(i, Instruction::Lt { width: 32, .. })));
        let tiny = CompileOptions {
            modulus: Modulus::prime(17).unwrap(),
            cmp_width: None,
        };
        // 15 * 15 wraps mod 17
        assert!(matches!(compile(&spec, &tiny), Err(CompileError::Range(_))));
        let spec = small_spec(vec![E::State(0), E::State(1)], E::lt(E::Obs(0), E::Obs(1)));
        assert!(matches!(compile(&spec, &tiny), Err(CompileError::Width(_))));
    }

    #[test]
    fn hold_keeps_state_on_violation() {
        let mut spec = small_spec(
            vec![E::add(E::State(0), E::Obs(0)), E::State(1)],
            E::lt(E::Const(9), E::add(E::State(0), E::Obs(0))),
        );
        spec.state[0].max = 1000;
        spec.hold_on_violation = true;
        let p = compile(&spec, &opts()).unwrap();
        let m = opts().modulus;
        let out = interpret(&p, m, &[5, 3], &[4, 0], 0).unwrap();
        assert_eq!((out.flag, out.next_state), (false, vec![9, 3]));
        let out = interpret(&p, m, &[5, 3], &[6, 0], 0).unwrap();
        assert_eq!((out.flag, out.next_state), (true, vec![5, 3]));
        // the flag's comparison feeds both the reveal and the hold
        let lts = p.program().body.iter().filter(|i| i.opcode() == Opcode::Lt).count();
        assert_eq!(lts, 1);
    }

    fn random_expr(rng: &mut ChaCha8Rng, depth: u32, want: SType) -> E {
        use SType::{Arith, Bool};
        if depth == 0 || rng.gen_bool(0.25) {
            return match want {
                Arith => match rng.gen_range(0..3) {
                    0 => E::State(rng.gen_range(0..2)),
                    1 => E::Obs(rng.gen_range(0..2)),
                    _ => E::Const(rng.gen_range(0..16)),
                },
                Bool => E::Bit(rng.gen()),
            };
        }
        let d = depth - 1;
        let op = rng.gen_range(0..9);
        let mut sub = |t| Box::new(random_expr(rng, d, t));
        match (want, op) {
            (Arith, 0) => E::Add(sub(Arith), sub(Arith)),
            (Arith, 1) => E::Sub(sub(Arith), sub(Arith)),
            (Arith, 2) => E::Mul(sub(Arith), sub(Arith)),
            (Arith, 3) => E::SqDiff(sub(Arith), sub(Arith)),
            (Arith, 4 | 5) => E::Sum(vec![*sub(Arith), *sub(Arith), *sub(Arith)]),
            (Arith, _) => E::Mux(sub(Bool), sub(Arith), sub(Arith)),
            (Bool, 0) => E::Lt(sub(Arith), sub(Arith)),
            (Bool, 1) => E::Le(sub(Arith), sub(Arith)),
            (Bool, 2) => E::Eq(sub(Arith), sub(Arith)),
            (Bool, 3) => E::And(sub(Bool), sub(Bool)),
            (Bool, 4) => E::Or(sub(Bool), sub(Bool)),
            (Bool, 5) => E::Xor(sub(Bool), sub(Bool)),
            (Bool, 6) => E::Not(sub(Bool)),
            (Bool, 7) => E::Any(vec![*sub(Bool), *sub(Bool), *sub(Bool)]),
            (Bool, _) => E::Mux(sub(Bool), sub(Bool), sub(Bool)),
        }
    }

    #[test]
    fn compiled_programs_match_direct_evaluation() {
        let m = opts().modulus;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut compiled = 0;
        while compiled < 1000 {
            let next = vec![random_expr(&mut rng, 3, SType::Arith), random_expr(&mut rng, 2, SType::Arith)];
            let flag = random_expr(&mut rng, 3, SType::Bool);
            let spec = small_spec(next, flag);
            let p = match compile(&spec, &opts()) {
                Ok(p) => p,
                Err(CompileError::Range(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            compiled += 1;
            for _ in 0..8 {
                let state: Vec<u128> = (0..2).map(|_| rng.gen_range(0..16)).collect();
                let obs: Vec<u128> = (0..2).map(|_| rng.gen_range(0..16)).collect();
                let env = Env {
                    modulus: m,
                    state: &state,
                    obs: &obs,
                    pubs: &[],
                };
                let out = interpret(&p, m, &state, &obs, 0).unwrap();
                assert_eq!(out.flag, spec.flag.eval(&env) == 1, "{:?}", spec.flag);
                let want: Vec<u128> = spec.next.iter().map(|e| e.eval(&env)).collect();
                assert_eq!(out.next_state, want);
            }
        }
    }
}
