//! Exact modular arithmetic over `Z_{2^w}` (w <= 128) and prime fields `F_p` (p < 2^128).

mod element;
mod modulus;
mod prime;

pub use element::{lagrange_weight, Element};
pub use modulus::{Modulus, ModulusKind, DEFAULT_PRIME};
pub use prime::is_prime;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: Modulus, right: Modulus },
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("{0} is not a field")]
    NotAField(Modulus),
    #[error("{0} is not prime")]
    NotPrime(u128),
    #[error("ring width {0} outside 1..=128")]
    InvalidWidth(u32),
    #[error("value {value} not reduced modulo {modulus}")]
    OutOfRange { value: u128, modulus: Modulus },
    #[error("expected {expected} octets, got {got}")]
    Encoding { expected: usize, got: usize },
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u128),
    #[error("evaluation point must be non-zero")]
    ZeroPoint,
    #[error("index {index} out of bounds for {len} points")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("cannot parse modulus {0:?} (expected pow2:<w>, prime:<p> or default)")]
    Parse(String),
}
