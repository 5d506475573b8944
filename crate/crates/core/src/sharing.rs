//! Secret-sharing schemes and share-local operations.
//!
//! Three instantiations: additive sharing over `Z_{2^w}` or `F_p`, Shamir
//! sharing over `F_p` with evaluation points `alpha_i = i`, and XOR sharing
//! of single bits.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{lagrange_weight, AlgebraError, Element, Modulus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SharingError {
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("expected {expected} shares, got {got}")]
    ShareCount { expected: usize, got: usize },
    #[error("scheme mismatch: {0} vs {1}")]
    SchemeMismatch(SchemeId, SchemeId),
    #[error("party mismatch: {0} vs {1}")]
    PartyMismatch(usize, usize),
    #[error("operation requires an arithmetic scheme, got {0}")]
    NotArithmetic(SchemeId),
    #[error("value {value} outside the domain of {scheme}")]
    OutOfDomain { value: u128, scheme: SchemeId },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SType {
    Arith,
    Bool,
}

impl fmt::Display for SType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SType::Arith => "arith",
            SType::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    AdditiveRing { modulus: Modulus, parties: usize },
    Shamir { modulus: Modulus, threshold: usize, parties: usize },
    BooleanXor { parties: usize },
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeId::AdditiveRing { modulus, parties } => {
                write!(f, "additive({modulus}, k={parties})")
            }
            SchemeId::Shamir {
                modulus,
                threshold,
                parties,
            } => write!(f, "shamir({modulus}, t={threshold}, k={parties})"),
            SchemeId::BooleanXor { parties } => write!(f, "xor(k={parties})"),
        }
    }
}

impl SchemeId {
    pub fn additive(modulus: Modulus, parties: usize) -> Result<Self, SharingError> {
        SchemeId::AdditiveRing { modulus, parties }.validated()
    }

    pub fn shamir(modulus: Modulus, threshold: usize, parties: usize) -> Result<Self, SharingError> {
        SchemeId::Shamir {
            modulus,
            threshold,
            parties,
        }
        .validated()
    }

    pub fn boolean(parties: usize) -> Result<Self, SharingError> {
        SchemeId::BooleanXor { parties }.validated()
    }

    fn validated(self) -> Result<Self, SharingError> {
        let k = self.parties();
        if k < 2 {
            return Err(SharingError::InvalidScheme(format!("{self}: need at least 2 parties")));
        }
        if k > u16::MAX as usize {
            return Err(SharingError::InvalidScheme(format!("{self}: too many parties")));
        }
        if let SchemeId::Shamir {
            modulus, threshold, ..
        } = self
        {
            if !modulus.is_prime_field() {
                return Err(SharingError::InvalidScheme(format!("{self}: needs a prime field")));
            }
            if threshold >= k {
                return Err(SharingError::InvalidScheme(format!("{self}: needs t < k")));
            }
            if modulus.prime_value().is_some_and(|p| p <= k as u128) {
                return Err(SharingError::InvalidScheme(format!(
                    "{self}: field too small for {k} distinct evaluation points"
                )));
            }
        }
        Ok(self)
    }

    pub fn parties(&self) -> usize {
        match *self {
            SchemeId::AdditiveRing { parties, .. }
            | SchemeId::Shamir { parties, .. }
            | SchemeId::BooleanXor { parties } => parties,
        }
    }

    /// Domain of both secrets and shares.
    pub fn modulus(&self) -> Modulus {
        match *self {
            SchemeId::AdditiveRing { modulus, .. } | SchemeId::Shamir { modulus, .. } => modulus,
            SchemeId::BooleanXor { .. } => Modulus::binary(),
        }
    }

    pub fn stype(&self) -> SType {
        match self {
            SchemeId::BooleanXor { .. } => SType::Bool,
            _ => SType::Arith,
        }
    }

    /// Largest coalition the scheme hides secrets from.
    pub fn privacy_threshold(&self) -> usize {
        match *self {
            SchemeId::Shamir { threshold, .. } => threshold,
            _ => self.parties() - 1,
        }
    }

    /// Whether every party (rather than only party 1) adds a public constant.
    pub fn constants_on_all_parties(&self) -> bool {
        matches!(self, SchemeId::Shamir { .. })
    }

    /// Weights `w_i` such that the secret is `sum w_i * s_i`, for the parties
    /// that take part in reconstruction. Additive and XOR schemes use all
    /// parties with weight one; Shamir uses parties `1..=t+1`.
    pub fn reconstruction_weights(&self) -> Vec<u128> {
        match *self {
            SchemeId::Shamir {
                modulus, threshold, ..
            } => {
                let points: Vec<Element> = (1..=threshold as u128 + 1)
                    .map(|x| Element::reduced(x, modulus))
                    .collect();
                (0..points.len())
                    .map(|i| {
                        lagrange_weight(&points, i)
                            .expect("points 1..=t+1 are distinct and non-zero in a validated scheme")
                            .value()
                    })
                    .collect()
            }
            _ => vec![1; self.parties()],
        }
    }

    /// Raw share values of `v` for parties `1..=k`, in order.
    pub fn share_raw<R: RngCore + ?Sized>(&self, v: u128, rng: &mut R) -> Vec<u128> {
        let m = self.modulus();
        debug_assert!(m.contains(v));
        let k = self.parties();
        match *self {
            SchemeId::AdditiveRing { .. } | SchemeId::BooleanXor { .. } => {
                let mut out = Vec::with_capacity(k);
                let mut acc = 0;
                for _ in 1..k {
                    let s = m.sample(rng);
                    acc = m.add(acc, s);
                    out.push(s);
                }
                out.push(m.sub(v, acc));
                out
            }
            SchemeId::Shamir { threshold, .. } => {
                let coeffs: Vec<u128> = (0..threshold).map(|_| m.sample(rng)).collect();
                (1..=k as u128)
                    .map(|x| {
                        // Horner from the top coefficient down to the secret.
                        let mut acc = 0;
                        for &c in coeffs.iter().rev() {
                            acc = m.add(m.mul(acc, x), c);
                        }
                        m.add(m.mul(acc, x), v)
                    })
                    .collect()
            }
        }
    }

    /// Secret from raw share values of parties `1..=k`.
    pub fn reconstruct_raw(&self, shares: &[u128]) -> Result<u128, SharingError> {
        if shares.len() != self.parties() {
            return Err(SharingError::ShareCount {
                expected: self.parties(),
                got: shares.len(),
            });
        }
        let m = self.modulus();
        Ok(match self {
            SchemeId::Shamir { .. } => self
                .reconstruction_weights()
                .iter()
                .zip(shares)
                .fold(0, |acc, (&w, &s)| m.add(acc, m.mul(w, s))),
            _ => shares.iter().fold(0, |acc, &s| m.add(acc, s)),
        })
    }
}

/// One sharing `[[v]]`: a share for each party `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector {
    pub scheme: SchemeId,
    pub shares: Vec<Element>,
}

impl ShareVector {
    pub fn from_raw(scheme: SchemeId, raw: &[u128]) -> Result<Self, SharingError> {
        if raw.len() != scheme.parties() {
            return Err(SharingError::ShareCount {
                expected: scheme.parties(),
                got: raw.len(),
            });
        }
        let m = scheme.modulus();
        let shares = raw
            .iter()
            .map(|&v| Element::new(v, m))
            .collect::<Result<_, _>>()?;
        Ok(ShareVector { scheme, shares })
    }

    pub fn raw(&self) -> Vec<u128> {
        self.shares.iter().map(Element::value).collect()
    }

    /// Share held by `party` (1-indexed).
    pub fn typed(&self, party: usize) -> TypedShare {
        TypedShare {
            party,
            value: self.shares[party - 1],
            stype: self.scheme.stype(),
            scheme: self.scheme,
        }
    }

    pub fn typed_all(&self) -> Vec<TypedShare> {
        (1..=self.shares.len()).map(|i| self.typed(i)).collect()
    }
}

/// One party's share of a value, tagged with its sharing type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypedShare {
    pub party: usize,
    pub value: Element,
    pub stype: SType,
    pub scheme: SchemeId,
}

pub fn share<R: RngCore + ?Sized>(
    v: &Element,
    scheme: SchemeId,
    rng: &mut R,
) -> Result<ShareVector, SharingError> {
    if v.modulus() != scheme.modulus() {
        return Err(SharingError::OutOfDomain {
            value: v.value(),
            scheme,
        });
    }
    ShareVector::from_raw(scheme, &scheme.share_raw(v.value(), rng))
}

pub fn reconstruct(sv: &ShareVector) -> Result<Element, SharingError> {
    let raw = sv.raw();
    let v = sv.scheme.reconstruct_raw(&raw)?;
    Ok(Element::new(v, sv.scheme.modulus())?)
}

/// Reassembles a sharing from typed shares given in any order.
pub fn collect(shares: &[TypedShare]) -> Result<ShareVector, SharingError> {
    let first = shares.first().ok_or(SharingError::ShareCount {
        expected: 2,
        got: 0,
    })?;
    let scheme = first.scheme;
    if shares.len() != scheme.parties() {
        return Err(SharingError::ShareCount {
            expected: scheme.parties(),
            got: shares.len(),
        });
    }
    let mut raw = vec![None; scheme.parties()];
    for s in shares {
        if s.scheme != scheme {
            return Err(SharingError::SchemeMismatch(scheme, s.scheme));
        }
        match raw.get_mut(s.party.wrapping_sub(1)) {
            Some(slot @ None) => *slot = Some(s.value.value()),
            Some(Some(_)) => return Err(SharingError::PartyMismatch(s.party, s.party)),
            None => return Err(SharingError::PartyMismatch(s.party, scheme.parties())),
        }
    }
    let raw: Vec<u128> = raw.into_iter().map(|v| v.expect("all slots filled")).collect();
    ShareVector::from_raw(scheme, &raw)
}

fn check_pair(a: &TypedShare, b: &TypedShare) -> Result<(), SharingError> {
    if a.scheme != b.scheme || a.stype != b.stype {
        return Err(SharingError::SchemeMismatch(a.scheme, b.scheme));
    }
    if a.party != b.party {
        return Err(SharingError::PartyMismatch(a.party, b.party));
    }
    Ok(())
}

/// Share-wise addition; XOR for Boolean shares.
pub fn local_add(a: &TypedShare, b: &TypedShare) -> Result<TypedShare, SharingError> {
    check_pair(a, b)?;
    Ok(TypedShare {
        value: a.value.add(&b.value)?,
        ..*a
    })
}

pub fn local_sub(a: &TypedShare, b: &TypedShare) -> Result<TypedShare, SharingError> {
    check_pair(a, b)?;
    if a.stype == SType::Bool {
        return Err(SharingError::NotArithmetic(a.scheme));
    }
    Ok(TypedShare {
        value: a.value.sub(&b.value)?,
        ..*a
    })
}

pub fn local_scale(a: &TypedShare, c: &Element) -> Result<TypedShare, SharingError> {
    if a.stype == SType::Bool {
        return Err(SharingError::NotArithmetic(a.scheme));
    }
    Ok(TypedShare {
        value: a.value.mul(c)?,
        ..*a
    })
}

pub fn local_add_const(a: &TypedShare, c: &Element) -> Result<TypedShare, SharingError> {
    if a.stype == SType::Bool {
        return Err(SharingError::NotArithmetic(a.scheme));
    }
    if a.party != 1 && !a.scheme.constants_on_all_parties() {
        return Ok(*a);
    }
    Ok(TypedShare {
        value: a.value.add(c)?,
        ..*a
    })
}

/// Boolean negation: party 1 flips its share.
pub fn local_not(a: &TypedShare) -> Result<TypedShare, SharingError> {
    if a.stype != SType::Bool {
        return Err(SharingError::SchemeMismatch(a.scheme, SchemeId::BooleanXor {
            parties: a.scheme.parties(),
        }));
    }
    if a.party != 1 {
        return Ok(*a);
    }
    Ok(TypedShare {
        value: a.value.add(&Element::one(Modulus::binary()))?,
        ..*a
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashMap;

    fn f(p: u128) -> Modulus {
        Modulus::prime(p).unwrap()
    }

    fn ring(w: u32) -> Modulus {
        Modulus::power_of_two(w).unwrap()
    }

    fn sv(scheme: SchemeId, raw: &[u128]) -> ShareVector {
        ShareVector::from_raw(scheme, raw).unwrap()
    }

    struct ZeroRng;
    impl RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            dest.fill(0);
            Ok(())
        }
    }

    #[test]
    fn scheme_validation() {
        assert!(SchemeId::shamir(f(7), 3, 3).is_err());
        assert!(SchemeId::shamir(ring(8), 1, 3).is_err());
        assert!(SchemeId::additive(ring(8), 1).is_err());
        assert!(SchemeId::boolean(1).is_err());
        assert!(SchemeId::shamir(f(3), 1, 3).is_err());
        assert!(SchemeId::shamir(f(7), 2, 3).is_ok());
    }

    #[test]
    fn share_examples() {
        let add = SchemeId::additive(ring(8), 3).unwrap();
        let v = sv(add, &[17, 200, 44]);
        assert_eq!(reconstruct(&v).unwrap().value(), 5);

        let sh = SchemeId::shamir(f(7), 1, 3).unwrap();
        let out = share(&Element::new(4, f(7)).unwrap(), sh, &mut ZeroRng).unwrap();
        assert_eq!(out.raw(), vec![4, 4, 4]);

        let xor = SchemeId::boolean(3).unwrap();
        assert_eq!(reconstruct(&sv(xor, &[1, 0, 0])).unwrap().value(), 1);
        assert_eq!(reconstruct(&sv(xor, &[1, 1, 0])).unwrap().value(), 0);
    }

    #[test]
    fn shamir_hand_interpolation() {
        // p(x) = 2 + 2x over F_7.
        let sh = SchemeId::shamir(f(7), 1, 3).unwrap();
        assert_eq!(reconstruct(&sv(sh, &[4, 6, 1])).unwrap().value(), 2);
    }

    #[test]
    fn wrong_share_count() {
        let add = SchemeId::additive(ring(8), 3).unwrap();
        assert!(matches!(
            add.reconstruct_raw(&[1, 2]),
            Err(SharingError::ShareCount { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn correctness_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let schemes = [
            SchemeId::additive(ring(8), 3).unwrap(),
            SchemeId::additive(ring(64), 5).unwrap(),
            SchemeId::additive(f(17), 3).unwrap(),
            SchemeId::shamir(f(17), 1, 3).unwrap(),
            SchemeId::shamir(f(101), 2, 5).unwrap(),
            SchemeId::shamir(Modulus::default_prime(), 1, 3).unwrap(),
            SchemeId::boolean(3).unwrap(),
        ];
        for scheme in schemes {
            let m = scheme.modulus();
            for _ in 0..10_000 {
                let v = Element::new(m.sample(&mut rng), m).unwrap();
                let s = share(&v, scheme, &mut rng).unwrap();
                assert_eq!(reconstruct(&s).unwrap(), v, "{scheme}");
            }
        }
    }

    #[test]
    fn any_t_plus_one_shares_reconstruct() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let m = f(101);
        let (t, k) = (2usize, 5usize);
        let scheme = SchemeId::shamir(m, t, k).unwrap();
        for _ in 0..200 {
            let v = m.sample(&mut rng);
            let raw = scheme.share_raw(v, &mut rng);
            // every (t+1)-subset of the 5 points
            for mask in 0u32..(1 << k) {
                if mask.count_ones() as usize != t + 1 {
                    continue;
                }
                let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                let pts: Vec<Element> = idx
                    .iter()
                    .map(|&i| Element::reduced(i as u128 + 1, m))
                    .collect();
                let mut acc = Element::zero(m);
                for (j, &i) in idx.iter().enumerate() {
                    let w = lagrange_weight(&pts, j).unwrap();
                    acc = acc.add(&w.mul(&Element::reduced(raw[i], m)).unwrap()).unwrap();
                }
                assert_eq!(acc.value(), v);
                assert_eq!(scheme.reconstruct_raw(&raw).unwrap(), v);
            }
        }
    }

    #[test]
    fn local_op_examples() {
        let xor = SchemeId::boolean(3).unwrap();
        let b = sv(xor, &[1, 0, 0]).typed(1);
        assert_eq!(local_add(&b, &b).unwrap().value.value(), 0);

        let add = SchemeId::additive(ring(8), 3).unwrap();
        let a = sv(add, &[200, 0, 0]).typed(1);
        let c = sv(add, &[100, 0, 0]).typed(1);
        assert_eq!(local_add(&a, &c).unwrap().value.value(), 44);

        let sh = SchemeId::shamir(f(7), 1, 3).unwrap();
        let a = sv(sh, &[4, 0, 0]).typed(1);
        let c = sv(sh, &[6, 0, 0]).typed(1);
        assert_eq!(local_add(&a, &c).unwrap().value.value(), 3);

        let s17 = sv(add, &[17, 0, 0]).typed(1);
        assert_eq!(local_scale(&s17, &Element::reduced(2, ring(8))).unwrap().value.value(), 34);
        assert_eq!(local_scale(&a, &Element::zero(f(7))).unwrap().value.value(), 0);
        assert_eq!(local_scale(&a, &Element::reduced(2, f(7))).unwrap().value.value(), 1);

        let five = Element::reduced(5, ring(8));
        let v = sv(add, &[17, 30, 40]);
        let shifted: Vec<_> = v
            .typed_all()
            .iter()
            .map(|s| local_add_const(s, &five).unwrap().value.value())
            .collect();
        assert_eq!(shifted, vec![22, 30, 40]);

        let v = sv(sh, &[4, 6, 1]);
        let shifted: Vec<_> = v
            .typed_all()
            .iter()
            .map(|s| local_add_const(s, &Element::reduced(5, f(7))).unwrap().value.value())
            .collect();
        assert_eq!(shifted, vec![2, 4, 6]);

        let zero = Element::zero(ring(8));
        for s in sv(add, &[1, 2, 3]).typed_all() {
            assert_eq!(local_add_const(&s, &zero).unwrap(), s);
        }
    }

    #[test]
    fn local_op_errors() {
        let xor = SchemeId::boolean(3).unwrap();
        let b = sv(xor, &[1, 0, 0]).typed(1);
        assert!(local_scale(&b, &Element::one(Modulus::binary())).is_err());
        assert!(local_add_const(&b, &Element::one(Modulus::binary())).is_err());
        let add = SchemeId::additive(ring(8), 3).unwrap();
        let a = sv(add, &[1, 2, 3]);
        assert!(matches!(
            local_add(&a.typed(1), &a.typed(2)),
            Err(SharingError::PartyMismatch(1, 2))
        ));
        assert!(local_add(&a.typed(1), &b).is_err());
        assert!(local_not(&a.typed(1)).is_err());
    }

    /// Homomorphism of every local op, exhaustive over F_7 pairs.
    #[test]
    fn homomorphism_exhaustive_f7() {
        let m = f(7);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for scheme in [SchemeId::additive(m, 3).unwrap(), SchemeId::shamir(m, 1, 3).unwrap()] {
            for x in 0..7u128 {
                for y in 0..7u128 {
                    let sx = share(&Element::reduced(x, m), scheme, &mut rng).unwrap();
                    let sy = share(&Element::reduced(y, m), scheme, &mut rng).unwrap();
                    let c = Element::reduced(y, m);
                    let mut sum = vec![];
                    let mut diff = vec![];
                    let mut scaled = vec![];
                    let mut shifted = vec![];
                    for (a, b) in sx.typed_all().iter().zip(sy.typed_all()) {
                        sum.push(local_add(a, &b).unwrap());
                        diff.push(local_sub(a, &b).unwrap());
                        scaled.push(local_scale(a, &c).unwrap());
                        shifted.push(local_add_const(a, &c).unwrap());
                    }
                    let rec = |v: &[TypedShare]| reconstruct(&collect(v).unwrap()).unwrap().value();
                    assert_eq!(rec(&sum), (x + y) % 7);
                    assert_eq!(rec(&diff), (x + 7 - y) % 7);
                    assert_eq!(rec(&scaled), x * y % 7);
                    assert_eq!(rec(&shifted), (x + y) % 7);
                }
            }
        }
        let xor = SchemeId::boolean(3).unwrap();
        for x in 0..2u128 {
            for y in 0..2u128 {
                let sx = share(&Element::reduced(x, Modulus::binary()), xor, &mut rng).unwrap();
                let sy = share(&Element::reduced(y, Modulus::binary()), xor, &mut rng).unwrap();
                let s: Vec<_> = sx
                    .typed_all()
                    .iter()
                    .zip(sy.typed_all())
                    .map(|(a, b)| local_add(a, &b).unwrap())
                    .collect();
                let n: Vec<_> = sx.typed_all().iter().map(|a| local_not(a).unwrap()).collect();
                assert_eq!(reconstruct(&collect(&s).unwrap()).unwrap().value(), x ^ y);
                assert_eq!(reconstruct(&collect(&n).unwrap()).unwrap().value(), 1 - x);
            }
        }
    }

    fn tv(a: &HashMap<Vec<u128>, f64>, b: &HashMap<Vec<u128>, f64>) -> f64 {
        let keys: std::collections::HashSet<_> = a.keys().chain(b.keys()).collect();
        keys.into_iter()
            .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>()
            / 2.0
    }

    /// Exact view distribution of coalition `set` for secret `v`, by
    /// enumerating all dealer randomness.
    fn exact_view(scheme: SchemeId, v: u128, set: &[usize]) -> HashMap<Vec<u128>, f64> {
        let m = scheme.modulus();
        let q = m.order().unwrap();
        let k = scheme.parties();
        let coins = match scheme {
            SchemeId::Shamir { threshold, .. } => threshold,
            _ => k - 1,
        };
        let total = q.pow(coins as u32);
        let mut out = HashMap::new();
        for idx in 0..total {
            let mut draws = vec![];
            let mut rest = idx;
            for _ in 0..coins {
                draws.push(rest % q);
                rest /= q;
            }
            let shares: Vec<u128> = match scheme {
                SchemeId::Shamir { .. } => (1..=k as u128)
                    .map(|x| {
                        let mut acc = 0;
                        for &c in draws.iter().rev() {
                            acc = m.add(m.mul(acc, x), c);
                        }
                        m.add(m.mul(acc, x), v)
                    })
                    .collect(),
                _ => {
                    let s: u128 = draws.iter().fold(0, |a, &d| m.add(a, d));
                    let mut all = draws.clone();
                    all.push(m.sub(v, s));
                    all
                }
            };
            let view: Vec<u128> = set.iter().map(|&i| shares[i - 1]).collect();
            *out.entry(view).or_insert(0.0) += 1.0 / total as f64;
        }
        out
    }

    #[test]
    fn privacy_exact_enumeration() {
        let cases = [
            (SchemeId::shamir(f(17), 1, 3).unwrap(), vec![vec![1], vec![2], vec![3]]),
            (SchemeId::shamir(f(17), 2, 3).unwrap(), vec![vec![1, 2], vec![2, 3], vec![1, 3]]),
            (SchemeId::additive(ring(4), 3).unwrap(), vec![vec![1], vec![1, 2], vec![2, 3]]),
            (SchemeId::additive(f(17), 3).unwrap(), vec![vec![1, 3]]),
            (SchemeId::boolean(3).unwrap(), vec![vec![1], vec![1, 2]]),
        ];
        for (scheme, sets) in cases {
            let q = scheme.modulus().order().unwrap();
            for set in sets {
                let base = exact_view(scheme, 0, &set);
                for v in 1..q {
                    let d = tv(&base, &exact_view(scheme, v, &set));
                    assert!(d < 1e-9, "{scheme} {set:?} v={v}: tv {d}");
                }
            }
        }
    }

    #[test]
    fn privacy_sampled() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let n = 100_000;
        let cases = [
            (SchemeId::shamir(f(17), 1, 3).unwrap(), vec![2usize]),
            (SchemeId::additive(ring(4), 3).unwrap(), vec![3]),
            (SchemeId::boolean(3).unwrap(), vec![1, 2]),
        ];
        for (scheme, set) in cases {
            let m = scheme.modulus();
            let (v0, v1) = (0, m.reduce(7).max(1));
            let mut dists = vec![];
            for v in [v0, v1] {
                let mut h: HashMap<Vec<u128>, f64> = HashMap::new();
                for _ in 0..n {
                    let raw = scheme.share_raw(v, &mut rng);
                    let view = set.iter().map(|&i| raw[i - 1]).collect();
                    *h.entry(view).or_insert(0.0) += 1.0 / n as f64;
                }
                dists.push(h);
            }
            let d = tv(&dists[0], &dists[1]);
            assert!(d < 0.02, "{scheme}: tv {d}");
        }
    }

    /// A coalition larger than the Shamir threshold learns the secret.
    #[test]
    fn shamir_above_threshold_is_not_private() {
        let scheme = SchemeId::shamir(f(17), 1, 3).unwrap();
        let a = exact_view(scheme, 0, &[1, 2]);
        let b = exact_view(scheme, 5, &[1, 2]);
        assert!((tv(&a, &b) - 1.0).abs() < 1e-9);
        assert_eq!(scheme.privacy_threshold(), 1);
    }
}
