use crate::algebra::{Element, Modulus};
use crate::dealer::{EdaBitShare, MaterialStore, ResourceLedger};
use crate::net::{Channel, Tag, Width};
use crate::sharing::{SType, SchemeId, TypedShare};

use super::circuits::{run_layers, AndOracle, AndTree, Circuit, LessThanPublic, Local, PrefixBorrow};
use super::{
    comparison_edabit, comparison_mode, decompose_mode, Cmp, CmpOp, EngineError, MaskMode,
    OpenLabel, OpenRecord, Stage, StageOut,
};
use crate::dealer::EdaKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenedValue {
    pub label: OpenLabel,
    pub value: Element,
    pub round: u32,
}

/// One party's protocol state: identity, schemes, peers, material and
/// accounting. Exactly one per party per session.
pub struct PartyContext {
    id: usize,
    scheme: SchemeId,
    bool_scheme: SchemeId,
    m: Modulus,
    weights: Vec<u128>,
    loc: Local,
    arith_holder: bool,
    chan: Channel,
    store: MaterialStore,
    ledger: ResourceLedger,
    opens: Vec<OpenRecord>,
}

/// Values queued for one exchange, grouped by message.
#[derive(Default)]
struct Opening {
    arith: Vec<u128>,
    bits: Vec<bool>,
    flags: Vec<bool>,
    labels: Vec<(OpenLabel, u64)>,
}

impl Opening {
    fn arith(&mut self, label: OpenLabel, vals: impl IntoIterator<Item = u128>) -> std::ops::Range<usize> {
        let start = self.arith.len();
        self.arith.extend(vals);
        self.labels.push((label, (self.arith.len() - start) as u64));
        start..self.arith.len()
    }

    fn bits(&mut self, label: OpenLabel, vals: impl IntoIterator<Item = bool>) -> std::ops::Range<usize> {
        let start = self.bits.len();
        self.bits.extend(vals);
        self.labels.push((label, (self.bits.len() - start) as u64));
        start..self.bits.len()
    }
}

struct Opened {
    arith: Vec<u128>,
    bits: Vec<bool>,
    flags: Vec<bool>,
}

impl PartyContext {
    pub fn new(scheme: SchemeId, chan: Channel, store: MaterialStore) -> Result<Self, EngineError> {
        if scheme.stype() != SType::Arith {
            return Err(EngineError::BadShare(format!("{scheme} is not arithmetic")));
        }
        let id = chan.me();
        if id == 0 || id > scheme.parties() || chan.parties() != scheme.parties() {
            return Err(EngineError::Protocol(format!(
                "node {id} cannot act as a party of {scheme}"
            )));
        }
        Ok(PartyContext {
            id,
            scheme,
            bool_scheme: SchemeId::boolean(scheme.parties())?,
            m: scheme.modulus(),
            weights: scheme.reconstruction_weights(),
            // XOR shares take public bits at party 1 only, whatever the arithmetic scheme.
            loc: Local { holder: id == 1 },
            arith_holder: id == 1 || scheme.constants_on_all_parties(),
            chan,
            store,
            ledger: ResourceLedger {
                bytes_sent: vec![0; scheme.parties()],
                ..ResourceLedger::default()
            },
            opens: Vec::new(),
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn modulus(&self) -> Modulus {
        self.m
    }

    pub fn local(&self) -> Local {
        self.loc
    }

    pub fn channel(&mut self) -> &mut Channel {
        &mut self.chan
    }

    pub fn store(&mut self) -> &mut MaterialStore {
        &mut self.store
    }

    /// Material consumed so far; `bytes_sent` holds this party's own total
    /// at its index.
    pub fn ledger(&self) -> ResourceLedger {
        let mut l = self.ledger.clone();
        l.bytes_sent[self.id - 1] = self.chan.stats().bytes_sent;
        l
    }

    pub fn open_log(&self) -> &[OpenRecord] {
        &self.opens
    }

    pub fn take_open_log(&mut self) -> Vec<OpenRecord> {
        std::mem::take(&mut self.opens)
    }

    /// This party's share of a public constant.
    #[inline]
    pub fn constant(&self, c: u128) -> u128 {
        if self.arith_holder {
            c
        } else {
            0
        }
    }

    fn arith_width(&self) -> Width {
        Width(self.m.byte_width())
    }

    fn reconstruct(&self, per_party: &[&[u128]], i: usize) -> u128 {
        let m = &self.m;
        self.weights
            .iter()
            .zip(per_party)
            .fold(0, |acc, (&w, s)| m.add(acc, m.mul(w, s[i])))
    }

    fn exchange(&mut self, o: Opening) -> Result<Opened, EngineError> {
        if o.arith.is_empty() && o.bits.is_empty() && o.flags.is_empty() {
            return Ok(Opened {
                arith: Vec::new(),
                bits: Vec::new(),
                flags: Vec::new(),
            });
        }
        let to_u = |b: &[bool]| b.iter().map(|&x| x as u128).collect::<Vec<u128>>();
        let bits = to_u(&o.bits);
        let flags = to_u(&o.flags);
        let aw = self.arith_width();
        let mut msgs: Vec<(Tag, Width, &[u128])> = Vec::with_capacity(3);
        if !o.arith.is_empty() {
            msgs.push((Tag::MaskedOpen, aw, &o.arith));
        }
        if !bits.is_empty() {
            msgs.push((Tag::MaskedOpen, Width(1), &bits));
        }
        if !flags.is_empty() {
            msgs.push((Tag::FlagShare, Width(1), &flags));
        }
        let got = self.chan.exchange(&msgs)?;
        let mut idx = 0;
        let mut next = || {
            let i = idx;
            idx += 1;
            i
        };
        let arith = if o.arith.is_empty() {
            Vec::new()
        } else {
            let mi = next();
            let per: Vec<&[u128]> = got.iter().map(|p| p[mi].as_slice()).collect();
            let m = self.m;
            for p in &per {
                if p.iter().any(|&v| !m.contains(v)) {
                    return Err(EngineError::Protocol("opened share outside the domain".into()));
                }
            }
            (0..o.arith.len()).map(|i| self.reconstruct(&per, i)).collect()
        };
        let xor_all = |mi: usize, n: usize| -> Result<Vec<bool>, EngineError> {
            let mut out = vec![false; n];
            for p in &got {
                for (o, &v) in out.iter_mut().zip(&p[mi]) {
                    if v > 1 {
                        return Err(EngineError::Protocol("opened bit share above 1".into()));
                    }
                    *o ^= v == 1;
                }
            }
            Ok(out)
        };
        let bits = if o.bits.is_empty() {
            Vec::new()
        } else {
            xor_all(next(), o.bits.len())?
        };
        let flags = if o.flags.is_empty() {
            Vec::new()
        } else {
            xor_all(next(), o.flags.len())?
        };
        let round = self.chan.round();
        for (label, count) in o.labels {
            if count > 0 {
                self.opens.push(OpenRecord { round, label, count });
            }
        }
        Ok(Opened { arith, bits, flags })
    }

    /// Executes a batch of protocols; see the module documentation.
    pub fn run_stage(&mut self, stage: &Stage) -> Result<StageOut, EngineError> {
        let m = self.m;
        let loc = self.loc;
        let mut o = Opening::default();

        let triples = self.store.take_triples(stage.muls.len())?;
        let mul_range = o.arith(
            OpenLabel::BeaverMask,
            stage
                .muls
                .iter()
                .zip(&triples)
                .flat_map(|(&(x, y), t)| [m.sub(x, t.a), m.sub(y, t.b)]),
        );

        let bit_triples = self.store.take_bit_triples(stage.ands.len())?;
        let and_range = o.bits(
            OpenLabel::AndMask,
            stage
                .ands
                .iter()
                .zip(&bit_triples)
                .flat_map(|(&(x, y), t)| [x ^ t.a, y ^ t.b]),
        );

        let dabits = self.store.take_dabits(stage.b2a.len())?;
        let b2a_range = o.bits(
            OpenLabel::DaBitMask,
            stage.b2a.iter().zip(&dabits).map(|(&b, d)| b ^ d.bit),
        );

        let mut cmp_items = Vec::with_capacity(stage.cmps.len());
        for c in &stage.cmps {
            cmp_items.push(self.prepare_cmp(c)?);
        }
        let cmp_range = o.arith(OpenLabel::ComparisonMask, cmp_items.iter().map(|i| i.masked));

        let mut dec_items = Vec::with_capacity(stage.decomps.len());
        for &(x, n) in &stage.decomps {
            decompose_mode(m, n)?;
            let e = self.take_edabit(EdaKind::Masked { width: n })?;
            let mask = m.add(e.arith, m.mul(m.pow2(n), e.high));
            dec_items.push((m.add(x, mask), e));
        }
        let dec_range = o.arith(OpenLabel::DecomposeMask, dec_items.iter().map(|d| d.0));

        o.flags = stage.reveals.clone();
        if !o.flags.is_empty() {
            o.labels.push((OpenLabel::Flag, o.flags.len() as u64));
        }

        let opened = self.exchange(o)?;
        self.ledger.triples += triples.len() as u64;
        self.ledger.bit_triples += bit_triples.len() as u64;
        self.ledger.dabits += dabits.len() as u64;
        self.ledger.edabits += (cmp_items.len() + dec_items.len()) as u64;

        let mut out = StageOut::default();
        let ef = &opened.arith[mul_range];
        for (j, t) in triples.iter().enumerate() {
            let (e, f) = (ef[2 * j], ef[2 * j + 1]);
            let z = m.add(m.add(t.c, m.mul(e, t.b)), m.mul(f, t.a));
            out.muls.push(m.add(z, self.constant(m.mul(e, f))));
        }
        let ef = &opened.bits[and_range];
        for (j, t) in bit_triples.iter().enumerate() {
            let (e, f) = (ef[2 * j], ef[2 * j + 1]);
            out.ands.push(t.c ^ (e & t.b) ^ (f & t.a) ^ loc.constant(e & f));
        }
        for (d, &bit) in dabits.iter().zip(&opened.bits[b2a_range]) {
            out.b2a.push(if bit {
                m.add(m.neg(d.arith), self.constant(1))
            } else {
                d.arith
            });
        }
        out.reveals = opened.flags;

        // Comparison and decomposition circuits, merged layer by layer.
        let mut circuits: Vec<Box<dyn Circuit>> = Vec::new();
        for (item, &c) in cmp_items.iter().zip(&opened.arith[cmp_range.clone()]) {
            circuits.push(item.circuit(&loc, m, c));
        }
        let dec_opened = &opened.arith[dec_range];
        for ((_, e), &c) in dec_items.iter().zip(dec_opened) {
            let n = e.bits.len();
            let cb: Vec<bool> = (0..n).map(|i| c >> i & 1 == 1).collect();
            // Borrows into bits 1..n come from prefixes of bits 0..n-1.
            let leaves = n.saturating_sub(1).max(1);
            circuits.push(Box::new(PrefixBorrow::new(&loc, &cb[..leaves], &e.bits[..leaves])));
        }
        let mut oracle = EngineAnd { ctx: self };
        run_layers(&mut circuits, &loc, &mut oracle)?;

        let mut outputs = circuits.iter().map(|c| c.output());
        for (item, &c) in cmp_items.iter().zip(&opened.arith[cmp_range]) {
            let r = outputs.next().expect("one circuit per comparison")[0];
            out.cmps.push(item.finish(&loc, c, r));
        }
        for ((_, e), &c) in dec_items.iter().zip(dec_opened) {
            let borrows = outputs.next().expect("one circuit per decomposition");
            let n = e.bits.len();
            let mut bits = Vec::with_capacity(n);
            for i in 0..n {
                let ci = c >> i & 1 == 1;
                let mut d = loc.xor_const(e.bits[i], ci);
                if i > 0 {
                    d ^= borrows[i - 1];
                }
                bits.push(d);
            }
            out.decomps.push(bits);
        }
        Ok(out)
    }

    fn take_edabit(&mut self, kind: EdaKind) -> Result<EdaBitShare, EngineError> {
        Ok(self
            .store
            .take_edabits(kind, 1)?
            .pop()
            .expect("store returned the requested item"))
    }

    fn prepare_cmp(&mut self, c: &Cmp) -> Result<CmpItem, EngineError> {
        let m = self.m;
        let mode = comparison_mode(m, c.width)?;
        let e = self.take_edabit(comparison_edabit(m, c.width)?)?;
        let masked = match mode {
            MaskMode::FullField => {
                let d = m.sub(c.x, c.y);
                m.add(m.add(d, d), e.arith)
            }
            _ => {
                let z = m.add(m.sub(c.x, c.y), self.constant(m.pow2(c.width)));
                let mask = m.add(e.arith, m.mul(m.pow2(c.width + 1), e.high));
                m.add(z, mask)
            }
        };
        Ok(CmpItem {
            op: c.op,
            width: c.width,
            mode,
            masked,
            r_bits: e.bits,
        })
    }
}

struct CmpItem {
    op: CmpOp,
    width: u32,
    mode: MaskMode,
    masked: u128,
    r_bits: Vec<bool>,
}

impl CmpItem {
    /// Bits of the opened value fed to the circuit.
    fn circuit_width(&self) -> usize {
        match self.mode {
            MaskMode::FullField => self.r_bits.len(),
            _ => self.width as usize,
        }
    }

    fn circuit(&self, loc: &Local, _m: Modulus, c: u128) -> Box<dyn Circuit> {
        let n = self.circuit_width();
        let cb: Vec<bool> = (0..n).map(|i| c >> i & 1 == 1).collect();
        let r = &self.r_bits[..n];
        match self.op {
            CmpOp::Lt => Box::new(LessThanPublic::new(loc, &cb, r)),
            CmpOp::Eq => Box::new(AndTree::new(
                cb.iter().zip(r).map(|(&ci, &ri)| loc.xor_const(ri, !ci)).collect(),
            )),
        }
    }

    fn finish(&self, loc: &Local, c: u128, circuit_out: bool) -> bool {
        match (self.op, self.mode) {
            (CmpOp::Eq, _) => circuit_out,
            // x < y iff bit `width` of x - y + 2^width is clear.
            (CmpOp::Lt, MaskMode::Ring | MaskMode::Statistical) => {
                let n = self.width as usize;
                let cn = c >> n & 1 == 1;
                loc.xor_const(self.r_bits[n] ^ circuit_out, !cn)
            }
            // x < y iff 2(x - y) mod p is odd.
            (CmpOp::Lt, MaskMode::FullField) => {
                let c0 = c & 1 == 1;
                loc.xor_const(self.r_bits[0] ^ circuit_out, c0)
            }
        }
    }
}

struct EngineAnd<'a> {
    ctx: &'a mut PartyContext,
}

impl AndOracle for EngineAnd<'_> {
    fn and_layer(&mut self, pairs: &[(bool, bool)]) -> Result<Vec<bool>, EngineError> {
        let ctx = &mut *self.ctx;
        let triples = ctx.store.take_bit_triples(pairs.len())?;
        let mut o = Opening::default();
        o.bits(
            OpenLabel::AndMask,
            pairs
                .iter()
                .zip(&triples)
                .flat_map(|(&(x, y), t)| [x ^ t.a, y ^ t.b]),
        );
        let opened = ctx.exchange(o)?;
        ctx.ledger.bit_triples += triples.len() as u64;
        let loc = ctx.loc;
        Ok(triples
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let (e, f) = (opened.bits[2 * j], opened.bits[2 * j + 1]);
                t.c ^ (e & t.b) ^ (f & t.a) ^ loc.constant(e & f)
            })
            .collect())
    }
}

/// Single-operation wrappers over [`PartyContext::run_stage`] on typed shares.
impl PartyContext {
    fn own(&self, x: &TypedShare, stype: SType) -> Result<u128, EngineError> {
        if x.party != self.id {
            return Err(EngineError::BadShare(format!(
                "party {} share handed to party {}",
                x.party, self.id
            )));
        }
        if x.stype != stype {
            return Err(EngineError::BadShare(format!("expected {stype} share, got {}", x.stype)));
        }
        let expected = match stype {
            SType::Arith => self.scheme,
            SType::Bool => self.bool_scheme,
        };
        if x.scheme != expected {
            return Err(EngineError::BadShare(format!("expected {expected}, got {}", x.scheme)));
        }
        Ok(x.value.value())
    }

    fn arith_share(&self, v: u128) -> TypedShare {
        TypedShare {
            party: self.id,
            value: Element::reduced(v, self.m),
            stype: SType::Arith,
            scheme: self.scheme,
        }
    }

    fn bool_share(&self, b: bool) -> TypedShare {
        TypedShare {
            party: self.id,
            value: Element::reduced(b as u128, Modulus::binary()),
            stype: SType::Bool,
            scheme: self.bool_scheme,
        }
    }

    /// Reconstructs `x` at every party. The label travels with the value so
    /// that parties disagreeing on what they open fail loudly.
    pub fn open(&mut self, label: OpenLabel, x: &TypedShare) -> Result<OpenedValue, EngineError> {
        let v = self.own(x, x.stype)?;
        let width = match x.stype {
            SType::Arith => self.arith_width(),
            SType::Bool => Width(1),
        };
        let code = [label.code()];
        let val = [v];
        let got = self.chan.exchange(&[
            (Tag::MaskedOpen, Width(1), &code),
            (Tag::MaskedOpen, width, &val),
        ])?;
        for (p, msgs) in got.iter().enumerate() {
            if msgs[0][0] != label.code() {
                return Err(EngineError::Protocol(format!(
                    "party {} opened under label code {}, this party under {label}",
                    p + 1,
                    msgs[0][0]
                )));
            }
        }
        let per: Vec<&[u128]> = got.iter().map(|p| p[1].as_slice()).collect();
        let value = match x.stype {
            SType::Arith => Element::reduced(self.reconstruct(&per, 0), self.m),
            SType::Bool => Element::reduced(
                per.iter().fold(0, |acc, s| acc ^ s[0]) & 1,
                Modulus::binary(),
            ),
        };
        let round = self.chan.round();
        self.opens.push(OpenRecord {
            round,
            label,
            count: 1,
        });
        Ok(OpenedValue {
            label,
            value,
            round,
        })
    }

    pub fn beaver_mul(&mut self, x: &TypedShare, y: &TypedShare) -> Result<TypedShare, EngineError> {
        let stage = Stage {
            muls: vec![(self.own(x, SType::Arith)?, self.own(y, SType::Arith)?)],
            ..Stage::default()
        };
        let out = self.run_stage(&stage)?;
        Ok(self.arith_share(out.muls[0]))
    }

    pub fn bool_and(&mut self, x: &TypedShare, y: &TypedShare) -> Result<TypedShare, EngineError> {
        let stage = Stage {
            ands: vec![(self.own(x, SType::Bool)? == 1, self.own(y, SType::Bool)? == 1)],
            ..Stage::default()
        };
        let out = self.run_stage(&stage)?;
        Ok(self.bool_share(out.ands[0]))
    }

    /// Boolean shares of the `n` low bits of `x`, least-significant first.
    pub fn bit_decompose(&mut self, x: &TypedShare, n: u32) -> Result<Vec<TypedShare>, EngineError> {
        let stage = Stage {
            decomps: vec![(self.own(x, SType::Arith)?, n)],
            ..Stage::default()
        };
        let out = self.run_stage(&stage)?;
        Ok(out.decomps[0].iter().map(|&b| self.bool_share(b)).collect())
    }

    /// Arithmetic share of `sum b_i 2^i`, one daBit per bit.
    pub fn bits_to_arith(&mut self, bits: &[TypedShare]) -> Result<TypedShare, EngineError> {
        let b2a = bits
            .iter()
            .map(|b| Ok(self.own(b, SType::Bool)? == 1))
            .collect::<Result<Vec<_>, EngineError>>()?;
        let out = self.run_stage(&Stage {
            b2a,
            ..Stage::default()
        })?;
        let m = self.m;
        let v = out
            .b2a
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &a)| m.add(acc, m.mul(m.pow2(i as u32), a)));
        Ok(self.arith_share(v))
    }

    pub fn secure_lt(&mut self, x: &TypedShare, y: &TypedShare, n: u32) -> Result<TypedShare, EngineError> {
        self.compare(CmpOp::Lt, x, y, n)
    }

    /// `[x = y]`, 1 meaning equal.
    pub fn secure_eq(&mut self, x: &TypedShare, y: &TypedShare, n: u32) -> Result<TypedShare, EngineError> {
        self.compare(CmpOp::Eq, x, y, n)
    }

    fn compare(&mut self, op: CmpOp, x: &TypedShare, y: &TypedShare, n: u32) -> Result<TypedShare, EngineError> {
        let stage = Stage {
            cmps: vec![Cmp {
                op,
                x: self.own(x, SType::Arith)?,
                y: self.own(y, SType::Arith)?,
                width: n,
            }],
            ..Stage::default()
        };
        let out = self.run_stage(&stage)?;
        Ok(self.bool_share(out.cmps[0]))
    }
}
