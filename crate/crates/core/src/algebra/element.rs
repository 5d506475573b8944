use std::fmt;

use super::{AlgebraError, Modulus};

/// A fully reduced value together with the domain it lives in.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Element {
    value: u128,
    modulus: Modulus,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Element {
    /// Rejects values that are not already reduced.
    pub fn new(value: u128, modulus: Modulus) -> Result<Self, AlgebraError> {
        if !modulus.contains(value) {
            return Err(AlgebraError::OutOfRange { value, modulus });
        }
        Ok(Element { value, modulus })
    }

    pub fn reduced(value: u128, modulus: Modulus) -> Self {
        Element {
            value: modulus.reduce(value),
            modulus,
        }
    }

    /// Caller guarantees `value` is reduced.
    #[inline]
    pub(crate) fn from_raw(value: u128, modulus: Modulus) -> Self {
        debug_assert!(modulus.contains(value));
        Element { value, modulus }
    }

    pub fn zero(modulus: Modulus) -> Self {
        Element { value: 0, modulus }
    }

    pub fn one(modulus: Modulus) -> Self {
        Element::reduced(1, modulus)
    }

    #[inline]
    pub fn value(&self) -> u128 {
        self.value
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    #[inline]
    fn check(&self, other: &Element) -> Result<(), AlgebraError> {
        if self.modulus != other.modulus {
            return Err(AlgebraError::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element, AlgebraError> {
        self.check(other)?;
        Ok(Element::from_raw(
            self.modulus.add(self.value, other.value),
            self.modulus,
        ))
    }

    pub fn sub(&self, other: &Element) -> Result<Element, AlgebraError> {
        self.check(other)?;
        Ok(Element::from_raw(
            self.modulus.sub(self.value, other.value),
            self.modulus,
        ))
    }

    pub fn mul(&self, other: &Element) -> Result<Element, AlgebraError> {
        self.check(other)?;
        Ok(Element::from_raw(
            self.modulus.mul(self.value, other.value),
            self.modulus,
        ))
    }

    pub fn neg(&self) -> Element {
        Element::from_raw(self.modulus.neg(self.value), self.modulus)
    }

    pub fn pow(&self, exp: u128) -> Element {
        Element::from_raw(self.modulus.pow(self.value, exp), self.modulus)
    }

    /// Errors on zero and on power-of-two moduli.
    pub fn inv(&self) -> Result<Element, AlgebraError> {
        Ok(Element::from_raw(
            self.modulus.inv(self.value)?,
            self.modulus,
        ))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.modulus.byte_width());
        self.modulus.encode_into(self.value, &mut out);
        out
    }

    pub fn decode(bytes: &[u8], modulus: Modulus) -> Result<Element, AlgebraError> {
        Ok(Element::from_raw(modulus.decode(bytes)?, modulus))
    }
}

/// Weight `L_i(0)` of the Lagrange basis over `points`, so that
/// `sum_i L_i(0) * f(points[i]) = f(0)` for every `f` of degree below `points.len()`.
pub fn lagrange_weight(points: &[Element], i: usize) -> Result<Element, AlgebraError> {
    let xi = points.get(i).ok_or(AlgebraError::IndexOutOfBounds {
        index: i,
        len: points.len(),
    })?;
    let modulus = xi.modulus();
    if !modulus.is_prime_field() {
        return Err(AlgebraError::NotAField(modulus));
    }
    let mut num = Element::one(modulus);
    let mut den = Element::one(modulus);
    for (j, xj) in points.iter().enumerate() {
        if xj.is_zero() {
            return Err(AlgebraError::ZeroPoint);
        }
        if j == i {
            continue;
        }
        let diff = xj.sub(xi)?;
        if diff.is_zero() {
            return Err(AlgebraError::DuplicatePoint(xj.value()));
        }
        num = num.mul(xj)?;
        den = den.mul(&diff)?;
    }
    num.mul(&den.inv()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u128) -> Modulus {
        Modulus::prime(p).unwrap()
    }

    fn el(v: u128, m: Modulus) -> Element {
        Element::new(v, m).unwrap()
    }

    /// Extended Euclid over signed integers, independent of the Fermat route.
    fn ext_euclid_inv(a: i128, p: i128) -> i128 {
        let (mut r0, mut r1) = (p, a);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        assert_eq!(r0, 1);
        t0.rem_euclid(p)
    }

    #[test]
    fn add_examples() {
        let z256 = Modulus::power_of_two(8).unwrap();
        assert_eq!(el(200, z256).add(&el(100, z256)).unwrap().value(), 44);
        let f7 = f(7);
        assert_eq!(el(4, f7).add(&el(6, f7)).unwrap().value(), 3);
        for m in [z256, f7, Modulus::default_prime()] {
            let a = Element::reduced(5, m);
            assert_eq!(a.add(&Element::zero(m)).unwrap(), a);
        }
    }

    #[test]
    fn mul_examples() {
        let f7 = f(7);
        assert_eq!(el(3, f7).mul(&el(4, f7)).unwrap().value(), 5);
        let z256 = Modulus::power_of_two(8).unwrap();
        assert_eq!(el(16, z256).mul(&el(16, z256)).unwrap().value(), 0);
        for m in [z256, f7] {
            let a = Element::reduced(6, m);
            assert_eq!(a.mul(&Element::one(m)).unwrap(), a);
        }
    }

    #[test]
    fn mismatched_moduli_rejected() {
        let a = el(1, f(7));
        let b = el(1, f(11));
        assert!(matches!(
            a.add(&b),
            Err(AlgebraError::ModulusMismatch { .. })
        ));
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(el(3, f(7)).inv().unwrap().value(), ext_euclid_inv(3, 7) as u128);
        assert_eq!(el(3, f(7)).inv().unwrap().value(), 5);
        assert_eq!(el(1, f(7)).inv().unwrap().value(), 1);
        assert_eq!(el(2, f(17)).inv().unwrap().value(), ext_euclid_inv(2, 17) as u128);
        assert_eq!(el(2, f(17)).inv().unwrap().value(), 9);
        assert!(matches!(el(0, f(7)).inv(), Err(AlgebraError::ZeroInverse)));
        let ring = Modulus::power_of_two(8).unwrap();
        assert!(matches!(el(3, ring).inv(), Err(AlgebraError::NotAField(_))));
    }

    #[test]
    fn lagrange_examples() {
        let f7 = f(7);
        let pts: Vec<_> = (1..=3).map(|x| el(x, f7)).collect();
        assert_eq!(lagrange_weight(&pts, 0).unwrap().value(), 3);
        assert_eq!(lagrange_weight(&pts, 1).unwrap().value(), 4);
        assert_eq!(lagrange_weight(&[el(1, f7)], 0).unwrap().value(), 1);
        assert!(matches!(
            lagrange_weight(&[el(1, f7), el(1, f7)], 0),
            Err(AlgebraError::DuplicatePoint(1))
        ));
        assert!(matches!(
            lagrange_weight(&[el(0, f7), el(1, f7)], 1),
            Err(AlgebraError::ZeroPoint)
        ));
    }

    /// Field axioms, checked exhaustively for every prime up to 31.
    #[test]
    fn field_axioms_small_primes() {
        for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            let m = f(p);
            let all: Vec<_> = (0..p).map(|v| el(v, m)).collect();
            for a in &all {
                if !a.is_zero() {
                    assert_eq!(a.mul(&a.inv().unwrap()).unwrap().value(), 1);
                    assert_eq!(a.inv().unwrap().value(), ext_euclid_inv(a.value() as i128, p as i128) as u128);
                }
                for b in &all {
                    assert_eq!(a.add(b).unwrap(), b.add(a).unwrap());
                    assert_eq!(a.mul(b).unwrap(), b.mul(a).unwrap());
                    for c in &all {
                        assert_eq!(
                            a.add(b).unwrap().add(c).unwrap(),
                            a.add(&b.add(c).unwrap()).unwrap()
                        );
                        assert_eq!(
                            a.mul(b).unwrap().mul(c).unwrap(),
                            a.mul(&b.mul(c).unwrap()).unwrap()
                        );
                        assert_eq!(
                            a.mul(&b.add(c).unwrap()).unwrap(),
                            a.mul(b).unwrap().add(&a.mul(c).unwrap()).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn encoding_round_trip_f17_exhaustive() {
        let m = f(17);
        for v in 0..17 {
            let e = el(v, m);
            assert_eq!(Element::decode(&e.encode(), m).unwrap(), e);
        }
    }
}
