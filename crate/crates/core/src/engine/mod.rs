//! Interactive protocols among the monitor parties.
//!
//! Everything runs through [`PartyContext::run_stage`]: a batch of
//! multiplications, ANDs, Boolean-to-arithmetic conversions, comparisons,
//! bit decompositions and flag reveals whose masked openings share a single
//! exchange, followed by the merged AND layers of the comparison circuits.

pub mod circuits;
mod context;
mod cost;
pub mod sim;

pub use context::{OpenedValue, PartyContext};
pub use cost::{stage_cost, Cost};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Modulus, ModulusKind};
use crate::dealer::{DealerError, EdaKind};
use crate::net::NetError;
use crate::sharing::SharingError;

/// Statistical security parameter for masks over prime fields.
pub const STAT_SECURITY: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Dealer(#[from] DealerError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error("width {width} unsupported over {modulus}: {reason}")]
    WidthOverflow {
        width: u32,
        modulus: Modulus,
        reason: &'static str,
    },
    #[error("share mismatch: {0}")]
    BadShare(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Why a value was reconstructed. Everything except `Flag` is masked by
/// fresh preprocessing material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpenLabel {
    BeaverMask,
    AndMask,
    DaBitMask,
    ComparisonMask,
    DecomposeMask,
    Flag,
    /// Direct opening of a caller-chosen value.
    Explicit,
}

impl OpenLabel {
    pub fn is_masked(&self) -> bool {
        !matches!(self, OpenLabel::Flag | OpenLabel::Explicit)
    }

    pub(crate) fn code(&self) -> u128 {
        *self as u128
    }
}

impl fmt::Display for OpenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenRecord {
    pub round: u32,
    pub label: OpenLabel,
    pub count: u64,
}

/// How a comparison or decomposition hides its operand when opening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// `Z_{2^w}`: the high mask is uniform over the rest of the ring.
    Ring,
    /// Large prime: `STAT_SECURITY`-bit statistical slack above the operand.
    Statistical,
    /// Small prime: a uniform field element, comparing via `LSB(2(x - y))`.
    FullField,
}

pub fn comparison_mode(modulus: Modulus, width: u32) -> Result<MaskMode, EngineError> {
    let bits = modulus.bits();
    let overflow = |reason| EngineError::WidthOverflow {
        width,
        modulus,
        reason,
    };
    if width == 0 {
        return Err(overflow("zero width"));
    }
    match modulus.kind() {
        ModulusKind::PowerOfTwo if width < bits => Ok(MaskMode::Ring),
        ModulusKind::PowerOfTwo => Err(overflow("needs width + 1 ring bits")),
        ModulusKind::Prime if bits >= width + 3 + STAT_SECURITY => Ok(MaskMode::Statistical),
        ModulusKind::Prime if width + 2 <= bits => Ok(MaskMode::FullField),
        ModulusKind::Prime => Err(overflow("needs 2^(width+1) < p")),
    }
}

pub fn decompose_mode(modulus: Modulus, width: u32) -> Result<MaskMode, EngineError> {
    let bits = modulus.bits();
    let overflow = |reason| EngineError::WidthOverflow {
        width,
        modulus,
        reason,
    };
    if width == 0 {
        return Err(overflow("zero width"));
    }
    match modulus.kind() {
        ModulusKind::PowerOfTwo if width <= bits => Ok(MaskMode::Ring),
        ModulusKind::PowerOfTwo => Err(overflow("wider than the ring")),
        ModulusKind::Prime if bits >= width + 2 + STAT_SECURITY => Ok(MaskMode::Statistical),
        ModulusKind::Prime => Err(overflow("field lacks statistical slack")),
    }
}

/// edaBit shape consumed by one comparison of `width`-bit operands.
pub fn comparison_edabit(modulus: Modulus, width: u32) -> Result<EdaKind, EngineError> {
    Ok(match comparison_mode(modulus, width)? {
        MaskMode::FullField => EdaKind::Field,
        _ => EdaKind::Masked { width: width + 1 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Eq,
}

/// One comparison of arithmetic shares of values below `2^width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cmp {
    pub op: CmpOp,
    pub x: u128,
    pub y: u128,
    pub width: u32,
}

/// A batch of protocol invocations executed together. All parties must
/// submit stages of identical shape.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stage {
    pub muls: Vec<(u128, u128)>,
    pub ands: Vec<(bool, bool)>,
    pub b2a: Vec<bool>,
    pub cmps: Vec<Cmp>,
    pub decomps: Vec<(u128, u32)>,
    pub reveals: Vec<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageOut {
    pub muls: Vec<u128>,
    pub ands: Vec<bool>,
    pub b2a: Vec<u128>,
    pub cmps: Vec<bool>,
    pub decomps: Vec<Vec<bool>>,
    pub reveals: Vec<bool>,
}

/// The data-independent part of a [`Stage`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct StageShape {
    pub muls: u64,
    pub ands: u64,
    pub b2a: u64,
    pub cmps: Vec<(CmpOp, u32)>,
    pub decomps: Vec<u32>,
    pub reveals: u64,
}

impl Stage {
    pub fn shape(&self) -> StageShape {
        StageShape {
            muls: self.muls.len() as u64,
            ands: self.ands.len() as u64,
            b2a: self.b2a.len() as u64,
            cmps: self.cmps.iter().map(|c| (c.op, c.width)).collect(),
            decomps: self.decomps.iter().map(|d| d.1).collect(),
            reveals: self.reveals.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.shape() == StageShape::default()
    }
}

/// Per-label totals of opened elements.
pub type OpenCounts = BTreeMap<OpenLabel, u64>;
