//! Crate-wide error type.

use std::path::PathBuf;

/// Every fallible operation in this crate returns this error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // number theory
    #[error("operand must be nonzero")]
    ZeroOperand,
    #[error("modulus must be at least 2")]
    BadModulus,
    #[error("value is not invertible modulo the given modulus")]
    NotInvertible,

    // paillier
    #[error("p and q must be distinct primes with gcd(pq, (p-1)(q-1)) = 1")]
    InvalidPrimes,
    #[error("generator g has no valid decryption inverse for this modulus")]
    InvalidGenerator,
    #[error("plaintext must be smaller than the key modulus n")]
    PlaintextTooLarge,
    #[error("randomizer r must satisfy 0 < r < n and gcd(r, n) = 1")]
    InvalidRandomizer,
    #[error("ciphertext does not belong to this key")]
    KeyMismatch,
    #[error("ciphertext is corrupt: decryption intermediate is not 1 mod n")]
    CorruptCiphertext,
    #[error("malformed key file: {0}")]
    KeyParse(String),

    // image encryption
    #[error("key modulus n must exceed 255 to encrypt 8-bit pixels")]
    ModulusTooSmall,
    #[error("image dimensions do not match pixel buffer length")]
    BadImageShape,
    #[error("malformed cipher-image file: {0}")]
    CipherImageParse(String),

    // dataset
    #[error("class directory is empty or dataset root has no class directories: {0}")]
    EmptyClass(PathBuf),
    #[error("unreadable image {path}: {reason}")]
    BadImage { path: PathBuf, reason: String },
    #[error("split ratios must be non-negative and sum to 1")]
    BadRatios,
    #[error("malformed manifest: {0}")]
    ManifestParse(String),

    // classifier
    #[error("tensor shape mismatch: {0}")]
    ShapeError(String),
    #[error("training diverged (non-finite loss or weights); lower the learning rate")]
    NumericalDivergence,
    #[error("malformed weights file: {0}")]
    WeightsParse(String),

    // metrics
    #[error("true and predicted label sequences are incompatible")]
    LabelMismatch,
    #[error("cannot report on an empty evaluation")]
    EmptyEvaluation,
    #[error("reports cover different class lists and cannot be compared")]
    IncomparableReports,

    // plumbing
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
