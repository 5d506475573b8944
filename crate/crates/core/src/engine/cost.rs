use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::Modulus;
use crate::dealer::{Demand, EdaKind};

use super::circuits::{run_layers, AndTree, Circuit, CountingAnd, LessThanPublic, Local, PrefixBorrow};
use super::{
    comparison_edabit, comparison_mode, decompose_mode, CmpOp, EngineError, MaskMode, OpenCounts,
    OpenLabel, StageShape,
};

/// Static resource count of one or more stages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub triples: u64,
    pub bit_triples: u64,
    pub dabits: u64,
    pub edabits: BTreeMap<EdaKind, u64>,
    pub rounds: u64,
    pub opened: OpenCounts,
}

impl Cost {
    pub fn demand(&self) -> Demand {
        Demand {
            triples: self.triples,
            bit_triples: self.bit_triples,
            dabits: self.dabits,
            edabits: self.edabits.clone(),
        }
    }

    pub fn total_edabits(&self) -> u64 {
        self.edabits.values().sum()
    }

    /// Sequential composition.
    pub fn add(&mut self, other: &Cost) {
        self.triples += other.triples;
        self.bit_triples += other.bit_triples;
        self.dabits += other.dabits;
        for (k, n) in &other.edabits {
            *self.edabits.entry(*k).or_default() += n;
        }
        self.rounds += other.rounds;
        for (l, n) in &other.opened {
            *self.opened.entry(*l).or_default() += n;
        }
    }

    pub fn scaled(&self, times: u64) -> Cost {
        Cost {
            triples: self.triples * times,
            bit_triples: self.bit_triples * times,
            dabits: self.dabits * times,
            edabits: self.edabits.iter().map(|(k, n)| (*k, n * times)).collect(),
            rounds: self.rounds * times,
            opened: self.opened.iter().map(|(l, n)| (*l, n * times)).collect(),
        }
    }
}

/// Exactly what [`super::PartyContext::run_stage`] consumes and opens for a
/// stage of this shape.
pub fn stage_cost(modulus: Modulus, shape: &StageShape) -> Result<Cost, EngineError> {
    let loc = Local { holder: true };
    let mut cost = Cost {
        triples: shape.muls,
        bit_triples: shape.ands,
        dabits: shape.b2a,
        ..Cost::default()
    };
    let mut open = |label, n: u64| {
        if n > 0 {
            *cost.opened.entry(label).or_default() += n;
        }
    };
    open(OpenLabel::BeaverMask, 2 * shape.muls);
    open(OpenLabel::AndMask, 2 * shape.ands);
    open(OpenLabel::DaBitMask, shape.b2a);
    open(OpenLabel::ComparisonMask, shape.cmps.len() as u64);
    open(OpenLabel::DecomposeMask, shape.decomps.len() as u64);
    open(OpenLabel::Flag, shape.reveals);

    let mut circuits: Vec<Box<dyn Circuit>> = Vec::new();
    for &(op, width) in &shape.cmps {
        let kind = comparison_edabit(modulus, width)?;
        *cost.edabits.entry(kind).or_default() += 1;
        let n = match comparison_mode(modulus, width)? {
            MaskMode::FullField => modulus.bits() as usize,
            _ => width as usize,
        };
        let zeros = vec![false; n];
        circuits.push(match op {
            CmpOp::Lt => Box::new(LessThanPublic::new(&loc, &zeros, &zeros)),
            CmpOp::Eq => Box::new(AndTree::new(zeros)),
        });
    }
    for &n in &shape.decomps {
        decompose_mode(modulus, n)?;
        *cost.edabits.entry(EdaKind::Masked { width: n }).or_default() += 1;
        let leaves = (n as usize).saturating_sub(1).max(1);
        let zeros = vec![false; leaves];
        circuits.push(Box::new(PrefixBorrow::new(&loc, &zeros, &zeros)));
    }
    let mut counter = CountingAnd::default();
    run_layers(&mut circuits, &loc, &mut counter)?;

    let first = !cost.opened.is_empty();
    cost.bit_triples += counter.ands;
    if counter.ands > 0 {
        *cost.opened.entry(OpenLabel::AndMask).or_default() += 2 * counter.ands;
    }
    cost.rounds = first as u64 + counter.layers;
    Ok(cost)
}
