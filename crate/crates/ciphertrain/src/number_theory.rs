//! Integer routines backing key generation and encryption: gcd/lcm, modular
//! exponentiation and inversion, Miller-Rabin primality, prime sampling.
//!
//! Values are `num_bigint::BigUint`, which keeps a canonical limb
//! representation and exact arithmetic. Everything here is a pure function of
//! its arguments; randomized routines take a [`SplitMix64`] explicitly.
//!
//! None of this is constant-time. The crate demonstrates that classification
//! survives encryption; it is not hardened against side channels.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Greatest common divisor by the Euclidean algorithm. `gcd(a, 0) = a` and
/// `gcd(0, 0) = 0`.
pub fn gcd(a: &BigUint, b: &BigUint) -> BigUint {
    let mut a = a.clone();
    let mut b = b.clone();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// Least common multiple, `a * b / gcd(a, b)`. Zero operands are rejected.
pub fn lcm(a: &BigUint, b: &BigUint) -> Result<BigUint> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroOperand);
    }
    Ok(a / gcd(a, b) * b)
}

/// `base^exp mod modulus` in one squaring per exponent bit.
///
/// Delegates to `BigUint::modpow` (Montgomery multiplication for odd moduli),
/// which the exhaustive small-range tests cross-check against a naive
/// repeated-multiplication oracle.
pub fn mod_exp(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if *modulus < BigUint::from(2u8) {
        return Err(Error::BadModulus);
    }
    Ok(base.modpow(exp, modulus))
}

/// Modular inverse by the extended Euclidean algorithm: the returned `b`
/// satisfies `a * b = 1 (mod modulus)` with `0 < b < modulus`.
pub fn mod_inv(a: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if *modulus < BigUint::from(2u8) {
        return Err(Error::BadModulus);
    }
    let a = BigInt::from(a % modulus);
    let m = BigInt::from(modulus.clone());
    let (g, x) = extended_gcd(&a, &m);
    if !g.is_one() {
        return Err(Error::NotInvertible);
    }
    let inv = ((x % &m) + &m) % &m;
    Ok(inv.to_biguint().expect("reduced inverse is non-negative"))
}

/// Returns `(gcd, x)` with `a*x + m*y = gcd` for some y.
fn extended_gcd(a: &BigInt, m: &BigInt) -> (BigInt, BigInt) {
    let (mut old_r, mut r) = (a.clone(), m.clone());
    let (mut old_x, mut x) = (BigInt::one(), BigInt::zero());
    while !r.is_zero() {
        let q = &old_r / &r;
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_x = &old_x - &q * &x;
        old_x = std::mem::replace(&mut x, next_x);
    }
    (old_r, old_x)
}

// Small primes used to cheaply reject composites before Miller-Rabin.
const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Miller-Rabin probabilistic primality test with `rounds` random bases.
///
/// `false` means definitely composite; `true` means prime except with
/// probability at most `4^-rounds`. Deterministic for a fixed rng seed.
pub fn is_probable_prime(n: &BigUint, rounds: u32, rng: &mut SplitMix64) -> bool {
    assert!(rounds >= 1);
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    if *n < two {
        return false;
    }
    for p in SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    // n - 1 = 2^s * d with d odd
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n > 2 is odd here");
    let d = &n_minus_1 >> s;

    'witness: for _ in 0..rounds {
        let a = rng.next_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Default Miller-Rabin round count: error probability at most 2^-80.
pub const DEFAULT_PRIME_ROUNDS: u32 = 40;

/// Samples a probable prime with exactly `bits` bits (top bit set), testing
/// odd candidates until one passes [`is_probable_prime`] at
/// [`DEFAULT_PRIME_ROUNDS`].
pub fn random_prime(bits: u64, rng: &mut SplitMix64) -> BigUint {
    assert!(bits >= 8, "prime size below 8 bits is not supported");
    loop {
        let mut candidate = rng.next_biguint_with_bits(bits);
        candidate |= BigUint::one(); // force odd
        if is_probable_prime(&candidate, DEFAULT_PRIME_ROUNDS, rng) {
            return candidate;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    /// Naive repeated-multiplication oracle for modular exponentiation.
    fn mod_exp_oracle(base: u64, exp: u64, modulus: u64) -> u64 {
        let mut acc: u128 = 1;
        for _ in 0..exp {
            acc = acc * base as u128 % modulus as u128;
        }
        acc as u64
    }

    /// Trial-division oracle.
    fn is_prime_oracle(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn gcd_cases() {
        assert_eq!(gcd(&big(12), &big(18)), big(6));
        // keygen condition for the 5/7 toy key: gcd(35, 4*6) = 1
        assert_eq!(gcd(&big(35), &big(24)), big(1));
        assert_eq!(gcd(&big(0), &big(7)), big(7));
        assert_eq!(gcd(&big(0), &big(0)), big(0));
    }

    #[test]
    fn lcm_cases() {
        assert_eq!(lcm(&big(4), &big(6)).unwrap(), big(12));
        assert_eq!(lcm(&big(5), &big(5)).unwrap(), big(5));
        assert_eq!(lcm(&big(1), &big(9)).unwrap(), big(9));
        assert!(matches!(lcm(&big(0), &big(3)), Err(Error::ZeroOperand)));
    }

    #[test]
    fn mod_exp_cases() {
        // (1+35)^12 mod 35^2 = 1 + 12*35 = 421 by the binomial identity,
        // cross-checked by the naive oracle.
        assert_eq!(mod_exp_oracle(36, 12, 1225), 421);
        assert_eq!(mod_exp(&big(36), &big(12), &big(1225)).unwrap(), big(421));

        assert_eq!(mod_exp_oracle(4, 35, 1225), 324);
        assert_eq!(mod_exp(&big(4), &big(35), &big(1225)).unwrap(), big(324));

        assert_eq!(mod_exp(&big(17), &big(0), &big(99)).unwrap(), big(1));
        assert!(matches!(
            mod_exp(&big(3), &big(4), &big(1)),
            Err(Error::BadModulus)
        ));
    }

    #[test]
    fn mod_exp_matches_oracle_exhaustively() {
        // All bases/exponents/moduli up to 10 bits on a coarse grid, plus the
        // full low range.
        for modulus in 2..64u64 {
            for base in 0..modulus {
                for exp in 0..24 {
                    assert_eq!(
                        mod_exp(&big(base), &big(exp), &big(modulus)).unwrap(),
                        big(mod_exp_oracle(base, exp, modulus)),
                        "base={base} exp={exp} mod={modulus}"
                    );
                }
            }
        }
        for &modulus in &[513u64, 769, 1021, 1023] {
            for &base in &[2u64, 3, 500, 1000] {
                for &exp in &[0u64, 1, 2, 37, 512, 1023] {
                    assert_eq!(
                        mod_exp(&big(base % modulus), &big(exp), &big(modulus)).unwrap(),
                        big(mod_exp_oracle(base % modulus, exp, modulus)),
                    );
                }
            }
        }
    }

    #[test]
    fn mod_inv_cases() {
        // 12 * 3 = 36 = 1 mod 35
        assert_eq!(mod_inv(&big(12), &big(35)).unwrap(), big(3));
        assert_eq!(mod_inv(&big(1), &big(97)).unwrap(), big(1));
        assert!(matches!(
            mod_inv(&big(6), &big(9)),
            Err(Error::NotInvertible)
        ));
    }

    #[test]
    fn primality_cases() {
        let mut rng = SplitMix64::new(11);
        assert!(is_probable_prime(&big(7), 20, &mut rng));
        assert!(!is_probable_prime(&big(1), 20, &mut rng));
        // 561 = 3 * 11 * 17 is a Carmichael number; Fermat-only tests fail it.
        assert!(!is_prime_oracle(561));
        assert!(!is_probable_prime(&big(561), 20, &mut rng));
    }

    #[test]
    fn primality_agrees_with_trial_division_below_100k() {
        let mut rng = SplitMix64::new(5);
        for n in 0..100_000u64 {
            assert_eq!(
                is_probable_prime(&big(n), 16, &mut rng),
                is_prime_oracle(n),
                "disagreement at {n}"
            );
        }
    }

    #[test]
    fn random_prime_structure() {
        let mut rng = SplitMix64::new(1);
        let p = random_prime(8, &mut rng);
        assert_eq!(p.bits(), 8);
        assert!(p >= big(128) && p <= big(255));

        let mut a = SplitMix64::new(77);
        let mut b = SplitMix64::new(77);
        assert_eq!(random_prime(24, &mut a), random_prime(24, &mut b));
    }

    #[test]
    fn random_prime_512_self_check() {
        let mut rng = SplitMix64::new(2024);
        let p = random_prime(512, &mut rng);
        assert_eq!(p.bits(), 512);
        let mut check_rng = SplitMix64::new(999);
        assert!(is_probable_prime(&p, 40, &mut check_rng));
    }

    proptest! {
        #[test]
        fn gcd_divides_both_and_lcm_identity(a in 1u64..10_000, b in 1u64..10_000) {
            let g = gcd(&big(a), &big(b));
            prop_assert!((big(a) % &g).is_zero());
            prop_assert!((big(b) % &g).is_zero());
            let l = lcm(&big(a), &big(b)).unwrap();
            prop_assert_eq!(l * g, big(a) * big(b));
        }

        #[test]
        fn mod_inv_roundtrip(a in 1u64..5_000, m in 2u64..5_000) {
            prop_assume!(gcd(&big(a), &big(m)).is_one());
            let inv = mod_inv(&big(a), &big(m)).unwrap();
            prop_assert!(inv > BigUint::ZERO && inv < big(m));
            prop_assert!((big(a) * inv % big(m)).is_one());
        }
    }
}
