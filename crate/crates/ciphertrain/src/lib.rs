//! Paillier-encrypted image datasets and a compact CNN that trains on them.
//!
//! The pipeline: generate a Paillier key pair, encrypt a folder-of-class-
//! folders image dataset (deterministic substitution mode keeps outputs as
//! valid 8-bit images; randomized mode is the full probabilistic scheme),
//! split it 80/10/10 into train/val/test, train the same small convolutional
//! classifier on the plain and encrypted copies, and compare the two test
//! accuracies. The interesting empirical fact is that the deterministic
//! encrypted copy trains almost as well as the plain one, while the
//! randomized copy is unlearnable.
//!
//! Start with the runnable programs under `examples/`, one per capability:
//!
//! ```bash
//! cargo run --release --example homomorphic_ops
//! cargo run --release --example image_encryption
//! cargo run --release --example dataset_split
//! cargo run --release --example train_quickstart
//! cargo run --release --example plain_vs_encrypted_gap
//! ```
//!
//! The same pipeline is scriptable through the `ciphertrain` binary
//! (`keygen`, `encrypt-dataset`, `train`, `evaluate`, `compare`, `report`).
//!
//! Security note: deterministic substitution mode is a key-dependent pixel
//! bijection. It preserves value frequencies and is not semantically secure;
//! that trade-off is the point of the experiment, not an oversight. Nothing
//! in this crate is constant-time.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod image_crypto;
pub mod imageio;
pub mod metrics;
pub mod nn;
pub mod number_theory;
pub mod paillier;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
