//! Paillier keys, encryption, decryption and the additive homomorphic
//! operations, plus the versioned key-file format.
//!
//! The scheme works in `Z_{n^2}` for `n = p*q`:
//!
//! * keygen: pick distinct primes p, q with `gcd(pq, (p-1)(q-1)) = 1`;
//!   `lambda = lcm(p-1, q-1)`; pick g; `mu = L(g^lambda mod n^2)^-1 mod n`
//!   where `L(x) = (x-1)/n`.
//! * encrypt: `c = g^m * r^n mod n^2` with `0 < r < n`, `gcd(r, n) = 1`.
//! * decrypt: `m = L(c^lambda mod n^2) * mu mod n`.
//!
//! Multiplying ciphertexts adds plaintexts mod n, and multiplying a
//! ciphertext by `g^k` adds the constant k. Both identities are exercised
//! exhaustively in the tests.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::number_theory::{gcd, is_probable_prime, lcm, mod_exp, mod_inv, random_prime};
use crate::rng::SplitMix64;

const KEY_FILE_VERSION: u32 = 1;

/// 64-bit digest identifying a key pair: the first 8 bytes (big-endian) of
/// SHA-256 over the canonical lowercase-hex serialization of `(n, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct KeyFingerprint(pub u64);

impl fmt::Display for KeyFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

fn fingerprint_of(n: &BigUint, g: &BigUint) -> KeyFingerprint {
    let mut h = Sha256::new();
    h.update(n.to_str_radix(16).as_bytes());
    h.update(b"\n");
    h.update(g.to_str_radix(16).as_bytes());
    let digest = h.finalize();
    KeyFingerprint(u64::from_be_bytes(digest[..8].try_into().unwrap()))
}

/// Public half of a key pair: modulus `n = p*q`, generator `g`, cached `n^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
    fingerprint: KeyFingerprint,
}

/// Private half: `lambda = lcm(p-1, q-1)`, `mu`, and the prime factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateKey {
    lambda: BigUint,
    mu: BigUint,
    p: BigUint,
    q: BigUint,
    fingerprint: KeyFingerprint,
}

/// One encrypted value in `Z_{n^2}`, tagged with the key it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub value: BigUint,
    pub key_fingerprint: KeyFingerprint,
}

/// A message in `[0, n)` for the key it is used with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plaintext(pub BigUint);

impl From<u64> for Plaintext {
    fn from(v: u64) -> Self {
        Plaintext(BigUint::from(v))
    }
}

impl From<BigUint> for Plaintext {
    fn from(v: BigUint) -> Self {
        Plaintext(v)
    }
}

impl PublicKey {
    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn fingerprint(&self) -> KeyFingerprint {
        self.fingerprint
    }

    /// `g^m mod n^2`, using the closed form `1 + m*n` when `g = n + 1`.
    fn g_pow(&self, m: &BigUint) -> BigUint {
        if self.g == &self.n + 1u8 {
            (BigUint::one() + m * &self.n) % &self.n_squared
        } else {
            self.g.modpow(m, &self.n_squared)
        }
    }
}

impl PrivateKey {
    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    pub fn fingerprint(&self) -> KeyFingerprint {
        self.fingerprint
    }
}

/// Generates a key pair with `bits`-bit primes (so `n` has about `2*bits`
/// bits). Primes are redrawn until `p != q` and `gcd(pq, (p-1)(q-1)) = 1`.
/// The generator is `g = n + 1`. Deterministic for a fixed rng seed.
pub fn keygen(bits: u64, rng: &mut SplitMix64) -> Result<(PublicKey, PrivateKey)> {
    assert!(bits >= 16, "keygen needs at least 16-bit primes");
    loop {
        let p = random_prime(bits, rng);
        let q = random_prime(bits, rng);
        if p == q {
            continue;
        }
        let n = &p * &q;
        let phi = (&p - 1u8) * (&q - 1u8);
        if !gcd(&n, &phi).is_one() {
            continue;
        }
        let g = &n + 1u8;
        return from_primes(&p, &q, &g);
    }
}

/// Builds a key pair from explicit primes and generator. Primality is
/// checked probabilistically; `g` must yield an invertible `L(g^lambda mod
/// n^2)`, otherwise no `mu` exists.
pub fn from_primes(p: &BigUint, q: &BigUint, g: &BigUint) -> Result<(PublicKey, PrivateKey)> {
    let mut check_rng = SplitMix64::new(0x70726d); // fixed seed: validation only
    if p == q
        || !is_probable_prime(p, 40, &mut check_rng)
        || !is_probable_prime(q, 40, &mut check_rng)
    {
        return Err(Error::InvalidPrimes);
    }
    let n = p * q;
    let phi = (p - 1u8) * (q - 1u8);
    if !gcd(&n, &phi).is_one() {
        return Err(Error::InvalidPrimes);
    }
    let n_squared = &n * &n;
    if g.is_zero() || *g >= n_squared {
        return Err(Error::InvalidGenerator);
    }
    let lambda = lcm(&(p - 1u8), &(q - 1u8))?;
    let u = mod_exp(g, &lambda, &n_squared)?;
    // L(u) must be an integer (u = 1 mod n) and invertible mod n.
    if ((&u + &n - 1u8) % &n) != BigUint::ZERO {
        return Err(Error::InvalidGenerator);
    }
    let l_value = (&u - 1u8) / &n;
    let mu = mod_inv(&(l_value % &n), &n).map_err(|_| Error::InvalidGenerator)?;
    let fingerprint = fingerprint_of(&n, g);
    Ok((
        PublicKey {
            n,
            g: g.clone(),
            n_squared,
            fingerprint,
        },
        PrivateKey {
            lambda,
            mu,
            p: p.clone(),
            q: q.clone(),
            fingerprint,
        },
    ))
}

/// Encrypts with an explicit randomizer: `c = g^m * r^n mod n^2`.
pub fn encrypt(pk: &PublicKey, m: &Plaintext, r: &BigUint) -> Result<Ciphertext> {
    if m.0 >= pk.n {
        return Err(Error::PlaintextTooLarge);
    }
    if r.is_zero() || *r >= pk.n || !gcd(r, &pk.n).is_one() {
        return Err(Error::InvalidRandomizer);
    }
    let value = pk.g_pow(&m.0) * r.modpow(&pk.n, &pk.n_squared) % &pk.n_squared;
    Ok(Ciphertext {
        value,
        key_fingerprint: pk.fingerprint,
    })
}

/// Encrypts with a randomizer drawn uniformly from the valid range.
/// Deterministic for a fixed rng seed.
pub fn encrypt_random(pk: &PublicKey, m: &Plaintext, rng: &mut SplitMix64) -> Result<Ciphertext> {
    let r = draw_randomizer(pk, rng);
    encrypt(pk, m, &r)
}

/// Uniform `r` in `(0, n)` with `gcd(r, n) = 1`; a redraw is only ever needed
/// if the candidate shares a factor with n.
pub fn draw_randomizer(pk: &PublicKey, rng: &mut SplitMix64) -> BigUint {
    let one = BigUint::one();
    loop {
        let r = rng.next_biguint_range(&one, &pk.n);
        if gcd(&r, &pk.n).is_one() {
            return r;
        }
    }
}

/// Decrypts: `m = L(c^lambda mod n^2) * mu mod n`.
pub fn decrypt(sk: &PrivateKey, pk: &PublicKey, c: &Ciphertext) -> Result<Plaintext> {
    if c.key_fingerprint != pk.fingerprint || sk.fingerprint != pk.fingerprint {
        return Err(Error::KeyMismatch);
    }
    let u = c.value.modpow(&sk.lambda, &pk.n_squared);
    if ((&u + &pk.n - 1u8) % &pk.n) != BigUint::ZERO {
        return Err(Error::CorruptCiphertext);
    }
    let l_value = (&u - 1u8) / &pk.n;
    Ok(Plaintext(l_value * &sk.mu % &pk.n))
}

/// Homomorphic addition: `c1 * c2 mod n^2` decrypts to `(m1 + m2) mod n`.
pub fn hadd(pk: &PublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
    if c1.key_fingerprint != pk.fingerprint || c2.key_fingerprint != pk.fingerprint {
        return Err(Error::KeyMismatch);
    }
    Ok(Ciphertext {
        value: &c1.value * &c2.value % &pk.n_squared,
        key_fingerprint: pk.fingerprint,
    })
}

/// Adds a plaintext constant: `c * g^m2 mod n^2` decrypts to
/// `(m1 + m2) mod n`.
pub fn scalar_add(pk: &PublicKey, c: &Ciphertext, m2: &Plaintext) -> Result<Ciphertext> {
    if c.key_fingerprint != pk.fingerprint {
        return Err(Error::KeyMismatch);
    }
    if m2.0 >= pk.n {
        return Err(Error::PlaintextTooLarge);
    }
    Ok(Ciphertext {
        value: &c.value * pk.g_pow(&m2.0) % &pk.n_squared,
        key_fingerprint: pk.fingerprint,
    })
}

/// Multiplies the plaintext by a constant: `c^k mod n^2` decrypts to
/// `(k * m) mod n`.
pub fn scalar_mul(pk: &PublicKey, c: &Ciphertext, k: &BigUint) -> Result<Ciphertext> {
    if c.key_fingerprint != pk.fingerprint {
        return Err(Error::KeyMismatch);
    }
    Ok(Ciphertext {
        value: c.value.modpow(k, &pk.n_squared),
        key_fingerprint: pk.fingerprint,
    })
}

// --- key files -------------------------------------------------------------
//
// Versioned text, one `name value` field per line, values as lowercase hex
// with no leading zeros:
//
//   version 1
//   n <hex>
//   g <hex>
//
// Private key files carry four more lines: lambda, mu, p, q. Field order is
// fixed, every field is mandatory, unknown versions and unknown fields are
// rejected, so re-serialization is byte-identical.

impl PublicKey {
    pub fn to_key_text(&self) -> String {
        format!(
            "version {}\nn {}\ng {}\n",
            KEY_FILE_VERSION,
            self.n.to_str_radix(16),
            self.g.to_str_radix(16)
        )
    }

    pub fn from_key_text(text: &str) -> Result<Self> {
        let fields = parse_key_fields(text, &["n", "g"])?;
        let n = fields[0].clone();
        let g = fields[1].clone();
        if n < BigUint::from(2u8) {
            return Err(Error::KeyParse("modulus too small".into()));
        }
        let n_squared = &n * &n;
        if g.is_zero() || g >= n_squared {
            return Err(Error::KeyParse("generator out of range".into()));
        }
        let fingerprint = fingerprint_of(&n, &g);
        Ok(PublicKey {
            n,
            g,
            n_squared,
            fingerprint,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_key_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_key_text(&text)
    }
}

impl PrivateKey {
    /// The private key file repeats n and g so it is self-contained; the
    /// fingerprint is recomputed from them on load.
    pub fn to_key_text(&self, pk: &PublicKey) -> String {
        format!(
            "version {}\nn {}\ng {}\nlambda {}\nmu {}\np {}\nq {}\n",
            KEY_FILE_VERSION,
            pk.n.to_str_radix(16),
            pk.g.to_str_radix(16),
            self.lambda.to_str_radix(16),
            self.mu.to_str_radix(16),
            self.p.to_str_radix(16),
            self.q.to_str_radix(16)
        )
    }

    pub fn from_key_text(text: &str) -> Result<(PublicKey, PrivateKey)> {
        let fields = parse_key_fields(text, &["n", "g", "lambda", "mu", "p", "q"])?;
        let pk = PublicKey::from_key_text(&format!(
            "version {}\nn {}\ng {}\n",
            KEY_FILE_VERSION,
            fields[0].to_str_radix(16),
            fields[1].to_str_radix(16)
        ))?;
        let sk = PrivateKey {
            lambda: fields[2].clone(),
            mu: fields[3].clone(),
            p: fields[4].clone(),
            q: fields[5].clone(),
            fingerprint: pk.fingerprint,
        };
        Ok((pk, sk))
    }

    pub fn save(&self, pk: &PublicKey, path: &Path) -> Result<()> {
        fs::write(path, self.to_key_text(pk)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(PublicKey, PrivateKey)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_key_text(&text)
    }
}

fn parse_key_fields(text: &str, names: &[&str]) -> Result<Vec<BigUint>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(first) if first == format!("version {KEY_FILE_VERSION}") => {}
        Some(other) => {
            return Err(Error::KeyParse(format!(
                "unsupported version line {other:?}"
            )))
        }
        None => return Err(Error::KeyParse("empty file".into())),
    }
    let mut values = Vec::with_capacity(names.len());
    for expected in names {
        let line = lines
            .next()
            .ok_or_else(|| Error::KeyParse(format!("missing field {expected}")))?;
        let (name, hex) = line
            .split_once(' ')
            .ok_or_else(|| Error::KeyParse(format!("malformed line {line:?}")))?;
        if name != *expected {
            return Err(Error::KeyParse(format!(
                "expected field {expected}, found {name}"
            )));
        }
        if hex.is_empty() || hex.chars().any(|c| !c.is_ascii_hexdigit() || c.is_uppercase()) {
            return Err(Error::KeyParse(format!("field {name} is not lowercase hex")));
        }
        let value = BigUint::parse_bytes(hex.as_bytes(), 16)
            .ok_or_else(|| Error::KeyParse(format!("field {name} is not valid hex")))?;
        values.push(value);
    }
    if lines.next().is_some() {
        return Err(Error::KeyParse("trailing content after last field".into()));
    }
    Ok(values)
}
