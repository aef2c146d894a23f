//! The headline experiment at demo scale: train the same classifier on a
//! plain dataset, its deterministic-encrypted copy, and a randomized-view
//! copy, then compare test accuracies.
//!
//! Expected outcome: the deterministic copy trains essentially as well as
//! the plain one (small gap), while the randomized views are unlearnable
//! (chance accuracy), because fresh per-pixel randomizers leave nothing for
//! the classifier to key on.
//!
//! ```bash
//! cargo run --release --example plain_vs_encrypted_gap
//! ```

use std::path::{Path, PathBuf};

use ciphertrain::dataset::{
    ingest, materialize, split, DatasetManifest, MaterializeMode, Split,
};
use ciphertrain::image_crypto::build_substitution_table;
use ciphertrain::metrics::{compare, confusion, report, ClassificationReport};
use ciphertrain::nn::{build_default_net, predict, train, TrainConfig};
use ciphertrain::paillier::keygen;
use ciphertrain::rng::SplitMix64;
use ciphertrain::synthetic::generate_dataset;

fn train_and_report(
    manifest: &DatasetManifest,
    root: &Path,
    config: &TrainConfig,
) -> ciphertrain::Result<ClassificationReport> {
    let mut net = build_default_net(config.input_size, 1, manifest.classes.len(), 0x11E7)?;
    let outcome = train(&mut net, manifest, root, config)?;
    let prediction = predict(
        &outcome.best_weights,
        manifest,
        root,
        Split::Test,
        config.input_size,
    )?;
    report(&confusion(
        &prediction.truth,
        &prediction.predictions,
        &manifest.classes,
    )?)
}

fn main() -> ciphertrain::Result<()> {
    let base = PathBuf::from("target/examples_out/plain_vs_encrypted_gap");
    let source = base.join("source");
    println!("generating 4 x 200 synthetic 64x64 images...");
    generate_dataset(&source, 200, 64, 0xF1C)?;
    let manifest = split(&ingest(&source)?, [0.8, 0.1, 0.1], 0x5711)?;

    let (pk, _) = keygen(16, &mut SplitMix64::new(0x6A9))?;
    let table = build_substitution_table(&pk, 0x7AB1E)?;

    println!("materializing plain, deterministic, and randomized-view copies...");
    let plain_dir = base.join("plain");
    let plain_manifest = materialize(&manifest, MaterializeMode::Plain, &source, &plain_dir)?;
    let det_dir = base.join("deterministic");
    let det_manifest = materialize(
        &manifest,
        MaterializeMode::Deterministic(&table),
        &source,
        &det_dir,
    )?;
    let rand_dir = base.join("randomized");
    let rand_manifest = materialize(
        &manifest,
        MaterializeMode::Randomized {
            public_key: &pk,
            seed: 0xF8E5,
            emit_view: true,
        },
        &source,
        &rand_dir,
    )?;

    // the library defaults: 30 epochs, batch 32, adam, 64x64 input
    let config = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };

    println!("\ntraining on the plain copy...");
    let plain_report = train_and_report(&plain_manifest, &plain_dir, &config)?;
    println!("training on the deterministic-encrypted copy...");
    let det_report = train_and_report(&det_manifest, &det_dir, &config)?;
    println!("training on the randomized low-byte views...");
    let rand_report = train_and_report(&rand_manifest, &rand_dir, &config)?;

    println!("\n== plain ==\n{plain_report}");
    println!("== deterministic encrypted ==\n{det_report}");

    let comparison = compare(&plain_report, &det_report, 0.05)?;
    println!("== comparison ==\n{comparison}");

    println!(
        "randomized-view test accuracy: {:.3} (chance is 0.25)",
        rand_report.accuracy
    );
    Ok(())
}
