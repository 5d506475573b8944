use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::prime::is_prime;
use super::AlgebraError;

/// Smallest prime above 2^127; the default session field.
pub const DEFAULT_PRIME: u128 = (1u128 << 127) + 29;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModulusKind {
    PowerOfTwo,
    Prime,
}

/// Montgomery context for an odd modulus above 2^64, with R = 2^128.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Montgomery {
    pub(crate) n: u128,
    n_prime: u128,
    r2: u128,
}

#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & u64::MAX as u128);
    let (b1, b0) = (b >> 64, b & u64::MAX as u128);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let (mid, mid_carry) = p01.overflowing_add(p10);
    let (lo, lo_carry) = p00.overflowing_add(mid << 64);
    let hi = p11 + (mid >> 64) + ((mid_carry as u128) << 64) + lo_carry as u128;
    (hi, lo)
}

impl Montgomery {
    pub(crate) fn new(n: u128) -> Self {
        debug_assert!(n & 1 == 1);
        let mut inv = n;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        let n_prime = inv.wrapping_neg();
        let mut r = (u128::MAX % n + 1) % n;
        for _ in 0..128 {
            r = add_mod(r, r, n);
        }
        Montgomery { n, n_prime, r2: r }
    }

    #[inline]
    fn redc(&self, hi: u128, lo: u128) -> u128 {
        let m = lo.wrapping_mul(self.n_prime);
        let (mn_hi, mn_lo) = mul_wide(m, self.n);
        let (_, c1) = lo.overflowing_add(mn_lo);
        let (t, c2) = hi.overflowing_add(mn_hi);
        let (t, c3) = t.overflowing_add(c1 as u128);
        if c2 || c3 || t >= self.n {
            t.wrapping_sub(self.n)
        } else {
            t
        }
    }

    #[inline]
    pub(crate) fn mul(&self, a: u128, b: u128) -> u128 {
        let (hi, lo) = mul_wide(a, b);
        let ab_over_r = self.redc(hi, lo);
        let (hi, lo) = mul_wide(ab_over_r, self.r2);
        self.redc(hi, lo)
    }
}

#[inline]
fn add_mod(a: u128, b: u128, n: u128) -> u128 {
    let (s, overflow) = a.overflowing_add(b);
    if overflow || s >= n {
        s.wrapping_sub(n)
    } else {
        s
    }
}

/// The modulus of a computation domain: either `Z_{2^w}` or a prime field `F_p`.
#[derive(Clone, Copy)]
pub struct Modulus {
    kind: ModulusKind,
    /// `w` for rings, `p` for prime fields.
    param: u128,
    bits: u32,
    mont: Option<Montgomery>,
}

impl PartialEq for Modulus {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.param == other.param
    }
}

impl Eq for Modulus {}

impl Hash for Modulus {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.param.hash(state);
    }
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModulusKind::PowerOfTwo => write!(f, "pow2:{}", self.param),
            ModulusKind::Prime => write!(f, "prime:{}", self.param),
        }
    }
}

impl FromStr for Modulus {
    type Err = AlgebraError;

    /// Parses `pow2:<w>`, `prime:<p>` or `default`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "default" {
            return Ok(Modulus::default_prime());
        }
        let bad = || AlgebraError::Parse(s.to_string());
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "pow2" => Modulus::power_of_two(value.parse().map_err(|_| bad())?),
            "prime" => Modulus::prime(value.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Modulus {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Modulus {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Modulus {
    pub fn power_of_two(width: u32) -> Result<Self, AlgebraError> {
        if !(1..=128).contains(&width) {
            return Err(AlgebraError::InvalidWidth(width));
        }
        Ok(Modulus {
            kind: ModulusKind::PowerOfTwo,
            param: width as u128,
            bits: width,
            mont: None,
        })
    }

    pub fn prime(p: u128) -> Result<Self, AlgebraError> {
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        let bits = 128 - p.leading_zeros();
        let mont = (p > u64::MAX as u128).then(|| Montgomery::new(p));
        Ok(Modulus {
            kind: ModulusKind::Prime,
            param: p,
            bits,
            mont,
        })
    }

    pub fn default_prime() -> Self {
        Modulus::prime(DEFAULT_PRIME).expect("default prime is prime")
    }

    /// `Z_2`, the domain of Boolean shares.
    pub fn binary() -> Self {
        Modulus::power_of_two(1).expect("width 1 is valid")
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }

    pub fn is_prime_field(&self) -> bool {
        self.kind == ModulusKind::Prime
    }

    /// Bit width of the largest element representation.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Octets per element on the wire.
    pub fn byte_width(&self) -> usize {
        self.bits.div_ceil(8) as usize
    }

    /// The prime `p`, if this is a field.
    pub fn prime_value(&self) -> Option<u128> {
        self.is_prime_field().then_some(self.param)
    }

    /// The modulus as an integer, or `None` for `2^128`.
    pub fn order(&self) -> Option<u128> {
        match self.kind {
            ModulusKind::Prime => Some(self.param),
            ModulusKind::PowerOfTwo if self.bits == 128 => None,
            ModulusKind::PowerOfTwo => Some(1u128 << self.bits),
        }
    }

    #[inline]
    fn mask(&self) -> u128 {
        if self.bits == 128 {
            u128::MAX
        } else {
            (1u128 << self.bits) - 1
        }
    }

    #[inline]
    pub fn contains(&self, v: u128) -> bool {
        match self.kind {
            ModulusKind::PowerOfTwo => v & !self.mask() == 0,
            ModulusKind::Prime => v < self.param,
        }
    }

    #[inline]
    pub fn reduce(&self, v: u128) -> u128 {
        match self.kind {
            ModulusKind::PowerOfTwo => v & self.mask(),
            ModulusKind::Prime => v % self.param,
        }
    }

    /// Maps a signed integer into the domain.
    pub fn reduce_signed(&self, v: i128) -> u128 {
        if v >= 0 {
            self.reduce(v as u128)
        } else {
            self.neg(self.reduce(v.unsigned_abs()))
        }
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        match self.kind {
            ModulusKind::PowerOfTwo => a.wrapping_add(b) & self.mask(),
            ModulusKind::Prime => add_mod(a, b, self.param),
        }
    }

    #[inline]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        match self.kind {
            ModulusKind::PowerOfTwo => a.wrapping_sub(b) & self.mask(),
            ModulusKind::Prime => {
                if a >= b {
                    a - b
                } else {
                    self.param - (b - a)
                }
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: u128) -> u128 {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        match self.kind {
            ModulusKind::PowerOfTwo => a.wrapping_mul(b) & self.mask(),
            ModulusKind::Prime => match &self.mont {
                Some(m) => m.mul(a, b),
                None => (a * b) % self.param,
            },
        }
    }

    pub fn pow(&self, mut base: u128, mut exp: u128) -> u128 {
        let mut acc = self.reduce(1);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse in a prime field (Fermat).
    pub fn inv(&self, a: u128) -> Result<u128, AlgebraError> {
        if !self.is_prime_field() {
            return Err(AlgebraError::NotAField(*self));
        }
        if a == 0 {
            return Err(AlgebraError::ZeroInverse);
        }
        Ok(self.pow(a, self.param - 2))
    }

    /// `2^i` reduced into the domain.
    pub fn pow2(&self, i: u32) -> u128 {
        if i < 128 {
            self.reduce(1u128 << i)
        } else {
            self.mul(self.pow2(127), self.pow2(i - 127))
        }
    }

    /// Uniform element of the domain.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u128 {
        let draw = |rng: &mut R| ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
        match self.kind {
            ModulusKind::PowerOfTwo => draw(rng) & self.mask(),
            ModulusKind::Prime => {
                let mask = self.mask();
                loop {
                    let v = draw(rng) & mask;
                    if v < self.param {
                        return v;
                    }
                }
            }
        }
    }

    /// Big-endian fixed-width encoding.
    pub fn encode_into(&self, v: u128, out: &mut Vec<u8>) {
        let bytes = v.to_be_bytes();
        out.extend_from_slice(&bytes[16 - self.byte_width()..]);
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<u128, AlgebraError> {
        if bytes.len() != self.byte_width() {
            return Err(AlgebraError::Encoding {
                expected: self.byte_width(),
                got: bytes.len(),
            });
        }
        let mut buf = [0u8; 16];
        buf[16 - bytes.len()..].copy_from_slice(bytes);
        let v = u128::from_be_bytes(buf);
        if !self.contains(v) {
            return Err(AlgebraError::OutOfRange {
                value: v,
                modulus: *self,
            });
        }
        Ok(v)
    }
}

impl Default for Modulus {
    fn default() -> Self {
        Modulus::default_prime()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn big_mul(a: u128, b: u128, p: u128) -> u128 {
        let r = BigUint::from(a) * BigUint::from(b) % BigUint::from(p);
        u128::try_from(r).unwrap()
    }

    #[test]
    fn ring_wraparound() {
        let m = Modulus::power_of_two(8).unwrap();
        assert_eq!(m.add(200, 100), 44);
        assert_eq!(m.mul(16, 16), 0);
        assert_eq!(m.sub(3, 5), 254);
        let full = Modulus::power_of_two(128).unwrap();
        assert_eq!(full.add(u128::MAX, 2), 1);
        assert_eq!(full.order(), None);
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(Modulus::power_of_two(0).is_err());
        assert!(Modulus::power_of_two(129).is_err());
        assert!(Modulus::prime(15).is_err());
        assert!(Modulus::prime(1).is_err());
    }

    #[test]
    fn default_prime_is_smallest_above_2_127() {
        let m = Modulus::default_prime();
        assert_eq!(m.bits(), 128);
        for c in (1..29).step_by(2) {
            assert!(Modulus::prime((1u128 << 127) + c).is_err());
        }
    }

    #[test]
    fn parse_and_display() {
        let m: Modulus = "prime:17".parse().unwrap();
        assert_eq!(m.to_string(), "prime:17");
        let r: Modulus = "pow2:64".parse().unwrap();
        assert_eq!(r.bits(), 64);
        assert!("prime:16".parse::<Modulus>().is_err());
        assert!("ring:3".parse::<Modulus>().is_err());
    }

    #[test]
    fn encoding_width_and_range() {
        let m = Modulus::prime(17).unwrap();
        assert_eq!(m.byte_width(), 1);
        assert!(m.decode(&[17]).is_err());
        assert!(m.decode(&[1, 2]).is_err());
        let d = Modulus::default_prime();
        assert_eq!(d.byte_width(), 16);
        let r = Modulus::power_of_two(12).unwrap();
        let mut out = Vec::new();
        r.encode_into(0xabc, &mut out);
        assert_eq!(out, vec![0x0a, 0xbc]);
    }

    proptest! {
        #[test]
        fn montgomery_matches_bigint(a in any::<u128>(), b in any::<u128>()) {
            for p in [crate::algebra::DEFAULT_PRIME, u64::MAX as u128 - 58, (1u128 << 127) - 1] {
                let m = Modulus::prime(p).unwrap();
                let (a, b) = (a % p, b % p);
                prop_assert_eq!(m.mul(a, b), big_mul(a, b, p));
                prop_assert_eq!(m.add(a, b), ((BigUint::from(a) + BigUint::from(b)) % BigUint::from(p)).try_into().unwrap());
                prop_assert_eq!(m.add(m.sub(a, b), b), a);
            }
        }

        #[test]
        fn sample_in_range(seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            for m in [Modulus::prime(17).unwrap(), Modulus::power_of_two(5).unwrap(), Modulus::default_prime()] {
                prop_assert!(m.contains(m.sample(&mut rng)));
            }
        }
    }
}
