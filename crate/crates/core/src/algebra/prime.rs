//! Deterministic primality testing for 128-bit integers.

use super::modulus::Montgomery;

const SMALL_PRIMES: [u128; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Miller-Rabin with a fixed base set.
///
/// The first twelve prime bases are an exact test below 3.3e24. Above that the
/// remaining bases are applied as well; no composite below 2^128 is known to
/// pass all twenty.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    let arith = MulMod::new(n);
    let bases: &[u128] = if n < 3_317_044_064_679_887_385_961_981 {
        &SMALL_PRIMES[..12]
    } else {
        &SMALL_PRIMES
    };
    'witness: for &a in bases {
        let mut x = arith.pow(a % n, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = arith.mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Modular multiplication for an arbitrary odd modulus.
pub(crate) enum MulMod {
    Native(u128),
    Mont(Montgomery),
}

impl MulMod {
    pub(crate) fn new(n: u128) -> Self {
        if n <= u64::MAX as u128 {
            MulMod::Native(n)
        } else {
            MulMod::Mont(Montgomery::new(n))
        }
    }

    pub(crate) fn mul(&self, a: u128, b: u128) -> u128 {
        match self {
            MulMod::Native(n) => (a * b) % n,
            MulMod::Mont(m) => m.mul(a, b),
        }
    }

    pub(crate) fn pow(&self, mut base: u128, mut exp: u128) -> u128 {
        let one = match self {
            MulMod::Native(n) => 1 % n,
            MulMod::Mont(m) => 1 % m.n,
        };
        let mut acc = one;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(n: u128) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn agrees_with_trial_division_below_10k() {
        for n in 0..10_000u128 {
            assert_eq!(is_prime(n), naive(n), "n = {n}");
        }
    }

    #[test]
    fn known_large_values() {
        assert!(is_prime((1u128 << 61) - 1));
        assert!(is_prime(u64::MAX as u128 - 58));
        assert!(is_prime((1u128 << 127) + 29));
        assert!(is_prime((1u128 << 127) - 1));
        assert!(!is_prime((1u128 << 127) + 1));
        // Carmichael numbers and a strong pseudoprime to bases 2..37 minus one.
        assert!(!is_prime(561));
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(!is_prime(((1u128 << 64) - 59) * ((1u128 << 61) - 1)));
    }
}
