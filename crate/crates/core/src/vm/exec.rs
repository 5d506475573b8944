use super::{CheckedProgram, Instruction, Src, VmError};
use crate::algebra::Modulus;
use crate::engine::{stage_cost, Cmp, CmpOp, Cost, PartyContext, Stage};
use crate::sharing::SType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutput {
    /// The reconstructed violation flag, identical at every party.
    pub flag: bool,
    /// This party's shares of the carried state, in `state` order.
    pub next_state: Vec<u128>,
}

pub(crate) fn check_inputs(
    p: &CheckedProgram,
    modulus: Modulus,
    state: &[u128],
    obs: &[u128],
) -> Result<(), VmError> {
    let prog = p.program();
    for (what, regs, vals) in [("state", &prog.state, state), ("observation", &prog.obs, obs)] {
        if regs.len() != vals.len() {
            return Err(VmError::Input(format!(
                "{} {what} values for {} registers",
                vals.len(),
                regs.len()
            )));
        }
        for (r, &v) in regs.iter().zip(vals) {
            let ok = match prog.regs[r] {
                SType::Arith => modulus.contains(v),
                SType::Bool => v <= 1,
            };
            if !ok {
                return Err(VmError::Input(format!("{what} r{r} = {v} outside its domain")));
            }
        }
    }
    Ok(())
}

/// Runs one round at this party. `t` is the zero-based round index that
/// public inputs are computed from.
pub fn execute_round(
    p: &CheckedProgram,
    ctx: &mut PartyContext,
    state: &[u128],
    obs: &[u128],
    t: u64,
) -> Result<RoundOutput, VmError> {
    let m = ctx.modulus();
    check_inputs(p, m, state, obs)?;
    let prog = p.program();
    let loc = ctx.local();
    let mut regs = vec![0u128; p.reg_count()];
    for (r, &v) in prog.state.iter().zip(state) {
        regs[*r] = v;
    }
    for (r, &v) in prog.obs.iter().zip(obs) {
        regs[*r] = v;
    }
    let public = |ctx: &PartyContext, ty: SType, v: u128| match ty {
        SType::Arith => ctx.constant(m.reduce(v)),
        SType::Bool => loc.constant(v == 1) as u128,
    };
    for &(r, pi) in &prog.pubs {
        regs[r] = public(ctx, pi.stype(), pi.eval(t));
    }
    for &(r, c) in &prog.consts {
        regs[r] = public(ctx, prog.regs[&r], c);
    }

    let mut flag = None;
    for step in p.steps() {
        for &i in &step.locals {
            let (dst, v) = match prog.body[i] {
                Instruction::Add { dst, a, b } => (dst, m.add(regs[a], regs[b])),
                Instruction::Sub { dst, a, b } => (dst, m.sub(regs[a], regs[b])),
                Instruction::AddC { dst, a, c } => (dst, m.add(regs[a], ctx.constant(m.reduce_signed(c)))),
                Instruction::Xor { dst, a, b } => (dst, regs[a] ^ regs[b]),
                Instruction::Not { dst, a } => (dst, loc.not(regs[a] == 1) as u128),
                ref other => unreachable!("{other} scheduled as local"),
            };
            regs[dst] = v;
        }
        if step.interactive.is_empty() {
            continue;
        }
        let src = |s: Src, regs: &[u128]| match s {
            Src::Reg(r) => regs[r],
            Src::Const(c) => ctx.constant(c),
        };
        let mut stage = Stage::default();
        for &i in &step.interactive {
            match prog.body[i] {
                Instruction::Mul { a, b, .. } => stage.muls.push((regs[a], regs[b])),
                Instruction::And { a, b, .. } => stage.ands.push((regs[a] == 1, regs[b] == 1)),
                Instruction::B2A { a, .. } => stage.b2a.push(regs[a] == 1),
                Instruction::Reveal { a, .. } => stage.reveals.push(regs[a] == 1),
                Instruction::Lt { a, b, width, .. } => stage.cmps.push(Cmp {
                    op: CmpOp::Lt,
                    x: src(a, &regs),
                    y: src(b, &regs),
                    width,
                }),
                Instruction::Eq { a, b, width, .. } => stage.cmps.push(Cmp {
                    op: CmpOp::Eq,
                    x: src(a, &regs),
                    y: src(b, &regs),
                    width,
                }),
                ref other => unreachable!("{other} scheduled as interactive"),
            }
        }
        let out = ctx.run_stage(&stage)?;
        let (mut muls, mut ands, mut b2a, mut cmps, mut reveals) = (
            out.muls.into_iter(),
            out.ands.into_iter(),
            out.b2a.into_iter(),
            out.cmps.into_iter(),
            out.reveals.into_iter(),
        );
        for &i in &step.interactive {
            let ins = prog.body[i];
            let v = match ins {
                Instruction::Mul { .. } => muls.next(),
                Instruction::And { .. } => ands.next().map(u128::from),
                Instruction::B2A { .. } => b2a.next(),
                Instruction::Lt { .. } | Instruction::Eq { .. } => cmps.next().map(u128::from),
                Instruction::Reveal { .. } => reveals.next().map(|f| {
                    flag = Some(f);
                    loc.constant(f) as u128
                }),
                _ => unreachable!(),
            };
            regs[ins.dst()] = v.expect("one engine output per instruction");
        }
    }
    let flag = flag.expect("typechecked programs reveal the flag");
    let next_state = p.carry().iter().map(|&n| regs[n]).collect();
    Ok(RoundOutput { flag, next_state })
}

/// Per-round material, openings and communication rounds; equal to what
/// [`execute_round`] consumes.
pub fn cost_estimate(p: &CheckedProgram, modulus: Modulus) -> Result<Cost, VmError> {
    let mut total = Cost::default();
    for shape in p.stage_shapes() {
        total.add(&stage_cost(modulus, &shape)?);
    }
    Ok(total)
}
