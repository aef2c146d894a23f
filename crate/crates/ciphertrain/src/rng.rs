//! Seeded pseudo-random source used everywhere randomness is needed.
//!
//! Every randomized operation in this crate takes one of these explicitly, so
//! key generation, dataset shuffling, weight initialization and training are
//! all reproducible from a 64-bit seed. The generator is SplitMix64 (Steele,
//! Lea & Flood): 64 bits of state, one add and three xor-shift-multiply steps
//! per output, identical output on every platform.
//!
//! Not a cryptographically secure generator. Keys derived from it are only as
//! unpredictable as the seed; callers that need real key material should seed
//! from OS entropy (the CLI does this when `--seed` is omitted).

use num_bigint::BigUint;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Seed from OS entropy via `std`'s random hasher state.
    pub fn from_entropy() -> Self {
        use std::collections::hash_map::RandomState;
        use std::hash::{BuildHasher, Hasher};
        let mut h = RandomState::new().build_hasher();
        h.write_u64(0);
        let mut s = SplitMix64::new(h.finish() ^ nanos_now());
        s.next_u64();
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix(self.state)
    }

    /// Uniform value in `[0, bound)` by modulo reduction. The bias is below
    /// `bound / 2^64`, irrelevant at the scales used here, and the rule is
    /// simple enough to restate in any language, which keeps manifests
    /// portable.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Uniform f64 in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer with exactly `bits` bits (top bit forced set).
    pub fn next_biguint_with_bits(&mut self, bits: u64) -> BigUint {
        assert!(bits >= 1);
        let words = bits.div_ceil(64);
        let mut digits = Vec::with_capacity(words as usize);
        for _ in 0..words {
            digits.push(self.next_u64());
        }
        let extra = words * 64 - bits;
        let top = words as usize - 1;
        digits[top] >>= extra;
        digits[top] |= 1u64 << (63 - extra); // force the top bit
        BigUint::from_slice(
            &digits
                .iter()
                .flat_map(|d| [(*d & 0xFFFF_FFFF) as u32, (*d >> 32) as u32])
                .collect::<Vec<_>>(),
        )
    }

    /// Uniform integer in `[low, high)` by rejection sampling on the bit
    /// width of the range.
    pub fn next_biguint_range(&mut self, low: &BigUint, high: &BigUint) -> BigUint {
        assert!(low < high);
        let span = high - low;
        let bits = span.bits();
        loop {
            let candidate = self.raw_biguint(bits);
            if candidate < span {
                return low + candidate;
            }
        }
    }

    /// Fisher-Yates shuffle driven by `next_below`; the swap sequence is
    /// `for i in (1..len).rev() { swap(i, next_u64() % (i+1)) }`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    fn raw_biguint(&mut self, bits: u64) -> BigUint {
        if bits == 0 {
            return BigUint::ZERO;
        }
        let words = bits.div_ceil(64);
        let mut digits = Vec::with_capacity(words as usize);
        for _ in 0..words {
            digits.push(self.next_u64());
        }
        let extra = words * 64 - bits;
        let top = words as usize - 1;
        digits[top] >>= extra;
        BigUint::from_slice(
            &digits
                .iter()
                .flat_map(|d| [(*d & 0xFFFF_FFFF) as u32, (*d >> 32) as u32])
                .collect::<Vec<_>>(),
        )
    }
}

/// SplitMix64 output mix, also used standalone to derive independent child
/// seeds: `derive_seed(seed, salt)` differs in every bit for different salts.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    mix(seed ^ mix(salt.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn mix(v: u64) -> u64 {
    let mut z = v;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn nanos_now() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0x5DEE_CE66_D23C_1A7B)
}
