use super::exec::check_inputs;
use super::{CheckedProgram, Instruction, RoundOutput, Src, VmError};
use crate::algebra::Modulus;

/// Plaintext reference semantics of one round. Comparison operands must fit
/// their declared width, as the secure protocol requires.
pub fn interpret(
    p: &CheckedProgram,
    modulus: Modulus,
    state: &[u128],
    obs: &[u128],
    t: u64,
) -> Result<RoundOutput, VmError> {
    check_inputs(p, modulus, state, obs)?;
    let m = modulus;
    let prog = p.program();
    let mut regs = vec![0u128; p.reg_count()];
    for (r, &v) in prog.state.iter().zip(state) {
        regs[*r] = v;
    }
    for (r, &v) in prog.obs.iter().zip(obs) {
        regs[*r] = v;
    }
    for &(r, pi) in &prog.pubs {
        regs[r] = m.reduce(pi.eval(t));
    }
    for &(r, c) in &prog.consts {
        regs[r] = m.reduce(c);
    }
    let mut flag = false;
    for (index, ins) in prog.body.iter().enumerate() {
        let operand = |s: Src, width: u32, regs: &[u128]| {
            let v = match s {
                Src::Reg(r) => regs[r],
                Src::Const(c) => c,
            };
            if v >> width != 0 {
                Err(VmError::Range { index, value: v, width })
            } else {
                Ok(v)
            }
        };
        let v = match *ins {
            Instruction::Add { a, b, .. } => m.add(regs[a], regs[b]),
            Instruction::Sub { a, b, .. } => m.sub(regs[a], regs[b]),
            Instruction::Mul { a, b, .. } => m.mul(regs[a], regs[b]),
            Instruction::AddC { a, c, .. } => m.add(regs[a], m.reduce_signed(c)),
            Instruction::Xor { a, b, .. } => regs[a] ^ regs[b],
            Instruction::And { a, b, .. } => regs[a] & regs[b],
            Instruction::Not { a, .. } => regs[a] ^ 1,
            Instruction::Lt { a, b, width, .. } => {
                (operand(a, width, &regs)? < operand(b, width, &regs)?) as u128
            }
            Instruction::Eq { a, b, width, .. } => {
                (operand(a, width, &regs)? == operand(b, width, &regs)?) as u128
            }
            Instruction::B2A { a, .. } => regs[a],
            Instruction::Reveal { a, .. } => {
                flag = regs[a] == 1;
                regs[a]
            }
        };
        regs[ins.dst()] = v;
    }
    let next_state = p.carry().iter().map(|&n| regs[n]).collect();
    Ok(RoundOutput { flag, next_state })
}
