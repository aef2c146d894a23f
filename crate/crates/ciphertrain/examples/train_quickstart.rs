//! Train the classifier on a small synthetic dataset and print the
//! per-class evaluation report.
//!
//! ```bash
//! cargo run --release --example train_quickstart
//! ```

use std::path::PathBuf;

use ciphertrain::dataset::{ingest, materialize, split, MaterializeMode, Split};
use ciphertrain::metrics::{confusion, report};
use ciphertrain::nn::{build_default_net, predict, train, TrainConfig};
use ciphertrain::synthetic::generate_dataset;

fn main() -> ciphertrain::Result<()> {
    let base = PathBuf::from("target/examples_out/train_quickstart");
    let source = base.join("source");
    generate_dataset(&source, 60, 32, 7)?;

    let manifest = split(&ingest(&source)?, [0.8, 0.1, 0.1], 1)?;
    let data_dir = base.join("plain");
    let manifest = materialize(&manifest, MaterializeMode::Plain, &source, &data_dir)?;

    let config = TrainConfig {
        epochs: 14,
        batch_size: 16,
        input_size: 32,
        seed: 5,
        ..TrainConfig::default()
    };
    let mut net = build_default_net(config.input_size, 1, manifest.classes.len(), 99)?;
    println!(
        "training on {} images ({} parameters)...",
        manifest.entries_for(Split::Train).count(),
        net.total_param_count()
    );

    let started = std::time::Instant::now();
    let outcome = train(&mut net, &manifest, &data_dir, &config)?;
    println!("trained {} epochs in {:.2?}", config.epochs, started.elapsed());
    for (i, e) in outcome.per_epoch.iter().enumerate() {
        println!(
            "  epoch {i}: loss {:.4}, train acc {:.3}, val acc {:.3}",
            e.train_loss, e.train_accuracy, e.val_accuracy
        );
    }
    println!("best epoch: {}", outcome.best_epoch);

    let prediction = predict(
        &outcome.best_weights,
        &manifest,
        &data_dir,
        Split::Test,
        config.input_size,
    )?;
    let cm = confusion(&prediction.truth, &prediction.predictions, &manifest.classes)?;
    println!("\n{}", report(&cm)?);
    Ok(())
}
