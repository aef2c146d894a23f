//! Key generation, encryption, and the additive homomorphic operations.
//!
//! ```bash
//! cargo run --release --example homomorphic_ops
//! ```

use num_bigint::BigUint;

use ciphertrain::paillier::{
    decrypt, encrypt, encrypt_random, from_primes, hadd, keygen, scalar_add, scalar_mul, Plaintext,
};
use ciphertrain::rng::SplitMix64;

fn main() -> ciphertrain::Result<()> {
    // A word-sized key first, so every number fits on screen: p = 5, q = 7,
    // g = 36 gives n = 35 and the private pair (lambda, mu) = (12, 3).
    println!("== toy key ==");
    let (pk, sk) = from_primes(
        &BigUint::from(5u8),
        &BigUint::from(7u8),
        &BigUint::from(36u8),
    )?;
    println!("n = {}, n^2 = {}", pk.n(), pk.n_squared());
    println!("lambda = {}, mu = {}", sk.lambda(), sk.mu());

    let m = Plaintext::from(3u64);
    let c = encrypt(&pk, &m, &BigUint::from(4u8))?;
    println!("encrypt(3, r=4) = {}", c.value);
    println!("decrypt({}) = {}", c.value, decrypt(&sk, &pk, &c)?.0);

    // Multiplying ciphertexts adds plaintexts mod n.
    let c5 = encrypt(&pk, &Plaintext::from(5u64), &BigUint::from(2u8))?;
    let sum = hadd(&pk, &c, &c5)?;
    println!("D(E(3) * E(5)) = {}", decrypt(&sk, &pk, &sum)?.0);

    // Multiplying by g^k adds the constant k.
    let plus_34 = scalar_add(&pk, &c, &Plaintext::from(34u64))?;
    println!(
        "D(E(3) * g^34) = {}   (wraps: (3 + 34) mod 35 = 2)",
        decrypt(&sk, &pk, &plus_34)?.0
    );

    // Raising to a constant multiplies the plaintext.
    let times_4 = scalar_mul(&pk, &c, &BigUint::from(4u8))?;
    println!("D(E(3)^4) = {}", decrypt(&sk, &pk, &times_4)?.0);

    // The same operations at a real key size, seeded for reproducibility.
    println!("\n== 512-bit-per-prime key ==");
    let mut rng = SplitMix64::new(42);
    let started = std::time::Instant::now();
    let (pk, sk) = keygen(512, &mut rng)?;
    println!("keygen: {:.2?}, fingerprint {}", started.elapsed(), pk.fingerprint());
    println!("n has {} bits", pk.n().bits());

    let m1 = Plaintext::from(123_456_789u64);
    let m2 = Plaintext::from(987_654_321u64);
    let c1 = encrypt_random(&pk, &m1, &mut rng)?;
    let c2 = encrypt_random(&pk, &m2, &mut rng)?;
    let sum = decrypt(&sk, &pk, &hadd(&pk, &c1, &c2)?)?;
    println!("D(E({}) * E({})) = {}", m1.0, m2.0, sum.0);
    assert_eq!(sum.0, BigUint::from(123_456_789u64 + 987_654_321u64));

    // Probabilistic encryption: same message, different ciphertexts.
    let again = encrypt_random(&pk, &m1, &mut rng)?;
    println!(
        "two encryptions of the same message are distinct: {}",
        again != c1
    );
    println!("both decrypt to the message: {}", decrypt(&sk, &pk, &again)?.0 == m1.0);
    Ok(())
}
