//! Ingest a folder-of-class-folders dataset, split it 80/10/10 with a seeded
//! shuffle, and materialize plain and encrypted copies from one manifest.
//!
//! ```bash
//! cargo run --release --example dataset_split
//! ```

use std::path::PathBuf;

use ciphertrain::dataset::{ingest, materialize, split, DatasetManifest, MaterializeMode};
use ciphertrain::image_crypto::build_substitution_table;
use ciphertrain::paillier::keygen;
use ciphertrain::rng::SplitMix64;
use ciphertrain::synthetic::generate_dataset;

fn main() -> ciphertrain::Result<()> {
    let base = PathBuf::from("target/examples_out/dataset_split");
    let source = base.join("source");
    generate_dataset(&source, 25, 32, 1234)?;

    let ingested = ingest(&source)?;
    println!("classes: {:?}", ingested.classes);

    let manifest = split(&ingested, [0.8, 0.1, 0.1], 42)?;
    println!("\nClass        Training  Validation  Testing");
    for (class, counts) in manifest.split_counts() {
        println!("{class:<12} {:>8}  {:>10}  {:>7}", counts[0], counts[1], counts[2]);
    }

    // same manifest, two materializations: split assignments stay identical,
    // only pixel values differ
    let plain_manifest = materialize(&manifest, MaterializeMode::Plain, &source, &base.join("plain"))?;

    let (pk, _) = keygen(16, &mut SplitMix64::new(5))?;
    let table = build_substitution_table(&pk, 77)?;
    let enc_manifest = materialize(
        &manifest,
        MaterializeMode::Deterministic(&table),
        &source,
        &base.join("encrypted"),
    )?;

    let assignments = |m: &DatasetManifest| -> Vec<(String, String)> {
        m.entries
            .iter()
            .map(|e| (e.path.clone(), format!("{:?}", e.split)))
            .collect()
    };
    println!(
        "\nplain and encrypted copies share the split assignment: {}",
        assignments(&plain_manifest) == assignments(&enc_manifest)
    );

    // the manifest reloads to an identical value
    let reloaded = DatasetManifest::load(&base.join("plain/manifest.txt"))?;
    println!("manifest reload round trip: {}", reloaded == plain_manifest);
    println!("\nmaterialized under {}", base.display());
    Ok(())
}
