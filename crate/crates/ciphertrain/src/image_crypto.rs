//! From Paillier ciphertexts to classifier-consumable encrypted images.
//!
//! Two modes:
//!
//! * **Deterministic**: one randomizer `r` is derived from the key
//!   fingerprint and a table seed, the 256 pixel values are encrypted with
//!   that fixed `r`, and each pixel value is replaced by the rank of its
//!   ciphertext among the 256. The result is a key-dependent bijection on
//!   `[0, 255]`, so encrypted images stay ordinary 8-bit images and per-pixel
//!   information is preserved exactly. This is what makes training on the
//!   encrypted copy possible, and it is correspondingly weaker than semantic
//!   security: equal pixels encrypt equally, so value frequencies leak.
//! * **Randomized**: fresh `r` per pixel, the full probabilistic scheme. The
//!   ciphertext grid round-trips exactly through decryption but carries no
//!   per-pixel structure a classifier could use, which the test suite
//!   demonstrates by training on low-byte views and landing at chance.

use num_bigint::BigUint;
use num_traits::One;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::paillier::{decrypt, encrypt, KeyFingerprint, Plaintext, PrivateKey, PublicKey};
use crate::rng::{derive_seed, SplitMix64};

const CIPHER_IMAGE_MAGIC: &str = "CTCI";
const CIPHER_IMAGE_VERSION: u32 = 1;

/// 8-bit image, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageTensor {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl ImageTensor {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if !(channels == 1 || channels == 3) || pixels.len() != width * height * channels {
            return Err(Error::BadImageShape);
        }
        Ok(ImageTensor {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Nearest-neighbor resize to a square `size x size`; channel count is
    /// preserved. Used at training time so materialized datasets stay
    /// faithful per-pixel.
    pub fn resize_square(&self, size: usize) -> ImageTensor {
        if self.width == size && self.height == size {
            return self.clone();
        }
        let mut pixels = vec![0u8; size * size * self.channels];
        for y in 0..size {
            let src_y = y * self.height / size;
            for x in 0..size {
                let src_x = x * self.width / size;
                for c in 0..self.channels {
                    pixels[(y * size + x) * self.channels + c] =
                        self.pixels[(src_y * self.width + src_x) * self.channels + c];
                }
            }
        }
        ImageTensor {
            width: size,
            height: size,
            channels: self.channels,
            pixels,
        }
    }

    /// Crop to the rectangle at (x, y) with the given size.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<ImageTensor> {
        if x + width > self.width || y + height > self.height {
            return Err(Error::BadImageShape);
        }
        let mut pixels = Vec::with_capacity(width * height * self.channels);
        for row in y..y + height {
            let start = (row * self.width + x) * self.channels;
            pixels.extend_from_slice(&self.pixels[start..start + width * self.channels]);
        }
        ImageTensor::new(width, height, self.channels, pixels)
    }
}

/// Key-derived pixel-value bijection built by ranking fixed-randomizer
/// ciphertexts. Same `(key, seed)` always yields the same table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionTable {
    table: [u8; 256],
    pub key_fingerprint: KeyFingerprint,
    pub r_derivation_seed: u64,
}

impl SubstitutionTable {
    pub fn table(&self) -> &[u8; 256] {
        &self.table
    }

    pub fn apply(&self, value: u8) -> u8 {
        self.table[value as usize]
    }

    /// The inverse permutation, for decrypting deterministic images.
    pub fn inverse(&self) -> SubstitutionTable {
        let mut inv = [0u8; 256];
        for (v, &mapped) in self.table.iter().enumerate() {
            inv[mapped as usize] = v as u8;
        }
        SubstitutionTable {
            table: inv,
            key_fingerprint: self.key_fingerprint,
            r_derivation_seed: self.r_derivation_seed,
        }
    }
}

/// Derives the fixed randomizer for deterministic mode from the key
/// fingerprint and a 64-bit seed.
fn derive_fixed_randomizer(pk: &PublicKey, seed: u64) -> BigUint {
    let mut rng = SplitMix64::new(derive_seed(seed, pk.fingerprint().0));
    let one = BigUint::one();
    loop {
        let r = rng.next_biguint_range(&one, pk.n());
        if crate::number_theory::gcd(&r, pk.n()).is_one() {
            return r;
        }
    }
}

/// Ranks the ciphertexts of `0..domain` under a fixed randomizer; the rank
/// vector is a permutation because encryption with fixed `r` is injective in
/// the message.
pub(crate) fn rank_fixed_r_ciphertexts(
    pk: &PublicKey,
    r: &BigUint,
    domain: usize,
) -> Result<Vec<usize>> {
    let mut cipher_values = Vec::with_capacity(domain);
    for v in 0..domain {
        let c = encrypt(pk, &Plaintext::from(v as u64), r)?;
        cipher_values.push(c.value);
    }
    // rank[v] = position of c_v in the ascending order of all ciphertexts
    let mut order: Vec<usize> = (0..domain).collect();
    order.sort_by(|&a, &b| cipher_values[a].cmp(&cipher_values[b]));
    let mut rank = vec![0usize; domain];
    for (position, &v) in order.iter().enumerate() {
        rank[v] = position;
    }
    Ok(rank)
}

/// Builds the pixel-value substitution table for a key. Requires `n > 255`
/// so every 8-bit value is a valid plaintext.
pub fn build_substitution_table(pk: &PublicKey, seed: u64) -> Result<SubstitutionTable> {
    if *pk.n() <= BigUint::from(255u32) {
        return Err(Error::ModulusTooSmall);
    }
    let r = derive_fixed_randomizer(pk, seed);
    let rank = rank_fixed_r_ciphertexts(pk, &r, 256)?;
    let mut table = [0u8; 256];
    for (v, &mapped) in rank.iter().enumerate() {
        table[v] = mapped as u8;
    }
    Ok(SubstitutionTable {
        table,
        key_fingerprint: pk.fingerprint(),
        r_derivation_seed: seed,
    })
}

/// Deterministic encryption: every pixel goes through the table. Output is a
/// valid image with identical dimensions.
pub fn encrypt_image_deterministic(img: &ImageTensor, table: &SubstitutionTable) -> ImageTensor {
    ImageTensor {
        width: img.width,
        height: img.height,
        channels: img.channels,
        pixels: img.pixels.iter().map(|&p| table.apply(p)).collect(),
    }
}

/// One Paillier ciphertext per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizedCipherImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub ciphertexts: Vec<crate::paillier::Ciphertext>,
}

/// Randomized encryption: fresh randomizer per pixel. Deterministic for a
/// fixed rng seed.
pub fn encrypt_image_randomized(
    img: &ImageTensor,
    pk: &PublicKey,
    rng: &mut SplitMix64,
) -> Result<RandomizedCipherImage> {
    if *pk.n() <= BigUint::from(255u32) {
        return Err(Error::ModulusTooSmall);
    }
    let mut ciphertexts = Vec::with_capacity(img.pixels.len());
    for &p in &img.pixels {
        let r = crate::paillier::draw_randomizer(pk, rng);
        ciphertexts.push(encrypt(pk, &Plaintext::from(p as u64), &r)?);
    }
    Ok(RandomizedCipherImage {
        width: img.width,
        height: img.height,
        channels: img.channels,
        ciphertexts,
    })
}

/// Decrypts every pixel of a randomized cipher image.
pub fn decrypt_image_randomized(
    ci: &RandomizedCipherImage,
    sk: &PrivateKey,
    pk: &PublicKey,
) -> Result<ImageTensor> {
    let mut pixels = Vec::with_capacity(ci.ciphertexts.len());
    for c in &ci.ciphertexts {
        let m = decrypt(sk, pk, c)?;
        let digits = m.0.to_u64_digits();
        let value = digits.first().copied().unwrap_or(0);
        if value > 255 || digits.len() > 1 {
            return Err(Error::CorruptCiphertext);
        }
        pixels.push(value as u8);
    }
    ImageTensor::new(ci.width, ci.height, ci.channels, pixels)
}

/// Low-byte view of a cipher image: pixel = ciphertext value mod 256. Purely
/// for side-by-side visualization; carries no recoverable image content.
pub fn cipher_image_to_view(ci: &RandomizedCipherImage) -> ImageTensor {
    let mask = BigUint::from(0xFFu32);
    let pixels = ci
        .ciphertexts
        .iter()
        .map(|c| (&c.value & &mask).to_u64_digits().first().copied().unwrap_or(0) as u8)
        .collect();
    ImageTensor {
        width: ci.width,
        height: ci.height,
        channels: ci.channels,
        pixels,
    }
}

// --- cipher-image files ------------------------------------------------------
//
// Text format:
//
//   CTCI 1
//   <width> <height> <channels>
//   <key fingerprint, 16 hex digits>
//   <len> <hex>        one line per pixel, row-major; len counts hex digits
//
// The length prefix lets a reader validate each record before parsing it.

pub fn write_cipher_image(path: &Path, ci: &RandomizedCipherImage) -> Result<()> {
    let fingerprint = ci
        .ciphertexts
        .first()
        .map(|c| c.key_fingerprint)
        .unwrap_or(KeyFingerprint(0));
    let mut out = Vec::new();
    writeln!(out, "{CIPHER_IMAGE_MAGIC} {CIPHER_IMAGE_VERSION}").unwrap();
    writeln!(out, "{} {} {}", ci.width, ci.height, ci.channels).unwrap();
    writeln!(out, "{fingerprint}").unwrap();
    for c in &ci.ciphertexts {
        let hex = c.value.to_str_radix(16);
        writeln!(out, "{} {}", hex.len(), hex).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_cipher_image(path: &Path) -> Result<RandomizedCipherImage> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .transpose()
            .map_err(|e| Error::io(path, e))?
            .ok_or_else(|| Error::CipherImageParse("unexpected end of file".into()))
    };

    let header = next_line()?;
    if header != format!("{CIPHER_IMAGE_MAGIC} {CIPHER_IMAGE_VERSION}") {
        return Err(Error::CipherImageParse(format!(
            "bad magic/version line {header:?}"
        )));
    }
    let dims = next_line()?;
    let parts: Vec<usize> = dims
        .split_whitespace()
        .map(|p| p.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::CipherImageParse(format!("bad dimension line {dims:?}")))?;
    let [width, height, channels] = parts[..] else {
        return Err(Error::CipherImageParse(format!(
            "bad dimension line {dims:?}"
        )));
    };
    let fp_line = next_line()?;
    let fingerprint = u64::from_str_radix(&fp_line, 16)
        .map_err(|_| Error::CipherImageParse(format!("bad fingerprint line {fp_line:?}")))?;

    let count = width * height * channels;
    let mut ciphertexts = Vec::with_capacity(count);
    for _ in 0..count {
        let record = next_line()?;
        let (len_str, hex) = record
            .split_once(' ')
            .ok_or_else(|| Error::CipherImageParse(format!("bad record {record:?}")))?;
        let len: usize = len_str
            .parse()
            .map_err(|_| Error::CipherImageParse(format!("bad length in {record:?}")))?;
        if hex.len() != len {
            return Err(Error::CipherImageParse(format!(
                "length prefix {len} does not match {} hex digits",
                hex.len()
            )));
        }
        let value = BigUint::parse_bytes(hex.as_bytes(), 16)
            .ok_or_else(|| Error::CipherImageParse(format!("bad hex in {record:?}")))?;
        ciphertexts.push(crate::paillier::Ciphertext {
            value,
            key_fingerprint: KeyFingerprint(fingerprint),
        });
    }
    if lines.next().is_some() {
        return Err(Error::CipherImageParse("trailing content".into()));
    }
    Ok(RandomizedCipherImage {
        width,
        height,
        channels,
        ciphertexts,
    })
}
