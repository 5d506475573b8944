use std::fmt;

use thiserror::Error;

use super::{Instruction, Opcode, Program, PublicInput, Reg, Src, DEFAULT_WIDTH};
use crate::sharing::SType;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

struct Line<'a> {
    no: usize,
    toks: Vec<Tok<'a>>,
    end: usize,
    pos: usize,
}

impl<'a> Line<'a> {
    fn err(&self, col: usize, msg: impl fmt::Display) -> ParseError {
        ParseError {
            line: self.no,
            col,
            msg: msg.to_string(),
        }
    }

    fn next(&mut self, what: &str) -> Result<Tok<'a>, ParseError> {
        let t = self
            .toks
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.err(self.end, format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(t.col, format!("unexpected `{}`", t.text))),
        }
    }

    fn reg(&mut self) -> Result<Reg, ParseError> {
        let t = self.next("register")?;
        parse_reg(t.text).ok_or_else(|| self.err(t.col, format!("expected register, found `{}`", t.text)))
    }

    fn regs(&mut self) -> Result<Vec<Reg>, ParseError> {
        let mut out = vec![self.reg()?];
        while self.peek().is_some() {
            out.push(self.reg()?);
        }
        Ok(out)
    }

    fn num<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        let t = self.next(what)?;
        t.text
            .parse()
            .map_err(|_| self.err(t.col, format!("expected {what}, found `{}`", t.text)))
    }

    fn src(&mut self) -> Result<Src, ParseError> {
        let t = self.next("register or literal")?;
        if let Some(r) = parse_reg(t.text) {
            return Ok(Src::Reg(r));
        }
        t.text
            .parse()
            .map(Src::Const)
            .map_err(|_| self.err(t.col, format!("expected register or literal, found `{}`", t.text)))
    }

    fn width(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some(t) if t.text.starts_with('#') => {
                self.pos += 1;
                t.text[1..]
                    .parse()
                    .map_err(|_| self.err(t.col, format!("bad width `{}`", t.text)))
            }
            _ => Ok(DEFAULT_WIDTH),
        }
    }
}

fn parse_reg(s: &str) -> Option<Reg> {
    let digits = s.strip_prefix('r').or_else(|| s.strip_prefix('R'))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn tokenize(no: usize, raw: &str) -> Line<'_> {
    let text = raw.split(';').next().unwrap_or("");
    let mut toks = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() || ch == ',' {
            if let Some(s) = start.take() {
                toks.push(Tok {
                    text: &text[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok {
            text: &text[s..],
            col: s + 1,
        });
    }
    Line {
        no,
        toks,
        end: text.trim_end().len() + 1,
        pos: 0,
    }
}

/// Parses the text form. `;` starts a comment; commas are optional
/// separators. Structural checks beyond syntax are left to
/// [`super::typecheck`].
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Program::default();
    for (i, raw) in text.lines().enumerate() {
        let mut line = tokenize(i + 1, raw);
        let Some(head) = line.peek() else { continue };
        line.pos = 1;
        match head.text {
            "reg" => {
                let r = line.reg()?;
                let t = line.next("`arith` or `bool`")?;
                let ty = match t.text {
                    "arith" => SType::Arith,
                    "bool" => SType::Bool,
                    other => return Err(line.err(t.col, format!("unknown type `{other}`"))),
                };
                if p.regs.insert(r, ty).is_some() {
                    return Err(line.err(head.col, format!("r{r} declared twice")));
                }
            }
            "state" => p.state.extend(line.regs()?),
            "obs" => p.obs.extend(line.regs()?),
            "pub" => {
                let r = line.reg()?;
                let kind = line.next("public input kind")?;
                let input = match kind.text {
                    "round" => PublicInput::Round,
                    "round_at_least" => PublicInput::RoundAtLeast(line.num("round")?),
                    "radius_sq" => PublicInput::RadiusSq {
                        base: line.num("base radius")?,
                        growth: line.num("growth")?,
                        max: line.num("maximum radius")?,
                    },
                    other => return Err(line.err(kind.col, format!("unknown public input `{other}`"))),
                };
                p.pubs.push((r, input));
            }
            "const" => {
                let r = line.reg()?;
                let c = line.num("constant")?;
                p.consts.push((r, c));
            }
            "next" => {
                let s = line.reg()?;
                let n = line.reg()?;
                p.next.push((s, n));
            }
            "flag" => {
                if p.flag.is_some() {
                    return Err(line.err(head.col, "flag declared twice"));
                }
                p.flag = Some(line.reg()?);
            }
            mnemonic => {
                let op = Opcode::from_mnemonic(mnemonic)
                    .ok_or_else(|| line.err(head.col, format!("unknown opcode `{mnemonic}`")))?;
                let dst = line.reg()?;
                let ins = match op {
                    Opcode::Add => Instruction::Add {
                        dst,
                        a: line.reg()?,
                        b: line.reg()?,
                    },
                    Opcode::Sub => Instruction::Sub {
                        dst,
                        a: line.reg()?,
                        b: line.reg()?,
                    },
                    Opcode::Mul => Instruction::Mul {
                        dst,
                        a: line.reg()?,
                        b: line.reg()?,
                    },
                    Opcode::Xor => Instruction::Xor {
                        dst,
                        a: line.reg()?,
                        b: line.reg()?,
                    },
                    Opcode::And => Instruction::And {
                        dst,
                        a: line.reg()?,
                        b: line.reg()?,
                    },
                    Opcode::AddC => Instruction::AddC {
                        dst,
                        a: line.reg()?,
                        c: line.num("constant")?,
                    },
                    Opcode::Not => Instruction::Not { dst, a: line.reg()? },
                    Opcode::B2A => Instruction::B2A { dst, a: line.reg()? },
                    Opcode::Reveal => Instruction::Reveal { dst, a: line.reg()? },
                    Opcode::Lt => Instruction::Lt {
                        dst,
                        a: line.src()?,
                        b: line.src()?,
                        width: line.width()?,
                    },
                    Opcode::Eq => Instruction::Eq {
                        dst,
                        a: line.src()?,
                        b: line.src()?,
                        width: line.width()?,
                    },
                };
                p.body.push(ins);
            }
        }
        line.done()?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CMP: &str = "\
reg r0 arith
reg r1 arith
reg r2 bool
reg r3 bool
state r0
obs r1
next r0 r1
flag r3
LT r2 r0 r1 #8
REVEAL r3 r2
";

    #[test]
    fn round_trips_canonical_text() {
        let p = parse_program(CMP).unwrap();
        assert_eq!(p.body.len(), 2);
        assert_eq!(p.to_string(), CMP);
        assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn accepts_sugar_and_comments() {
        let p = parse_program("reg R1 arith ; comment\nLT r2, r1, 100\nADDC r4 r1 -3\n").unwrap();
        assert_eq!(
            p.body[0],
            Instruction::Lt {
                dst: 2,
                a: Src::Reg(1),
                b: Src::Const(100),
                width: DEFAULT_WIDTH
            }
        );
        assert_eq!(p.body[1], Instruction::AddC { dst: 4, a: 1, c: -3 });
    }

    #[test]
    fn diagnostics_carry_positions() {
        let e = parse_program("reg r0 arith\n  FOO r1 r2").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        let e = parse_program("ADD r1 r2 x7").unwrap_err();
        assert_eq!((e.line, e.col), (1, 11));
        let e = parse_program("ADD r1 r2").unwrap_err();
        assert_eq!((e.line, e.col), (1, 10));
        let e = parse_program("NOT r1 r2 r3").unwrap_err();
        assert_eq!((e.line, e.col), (1, 11));
        let e = parse_program("reg r1 int").unwrap_err();
        assert_eq!((e.line, e.col), (1, 8));
        assert!(parse_program("LT r1 r2 r3 #x").is_err());
        assert!(parse_program("reg r1 bool\nreg r1 arith").is_err());
        assert!(parse_program("pub r1 tomorrow").is_err());
    }
}
