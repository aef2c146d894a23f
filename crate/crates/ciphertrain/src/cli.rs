//! Command-line surface: `keygen`, `encrypt-dataset`, `train`, `evaluate`,
//! `compare`, `report`.
//!
//! Exit codes are a stable contract for scripting: 0 success, 1 usage or
//! config error, 2 I/O or data error, 3 numerical divergence, 4 comparison
//! threshold breach.
//!
//! Values resolve as: command-line flag, then `CIPHERTRAIN_OUT_DIR` (for the
//! encrypt-dataset output directory only), then the `--config` file, then the
//! built-in default.

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{self, DatasetManifest, MaterializeMode, Split, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::image_crypto::build_substitution_table;
use crate::metrics::{self, ClassificationReport, ComparisonReport, ConfusionMatrix};
use crate::nn::{
    self, build_default_net, load_weights, save_weights, OptimizerKind, TrainConfig, TrainCurves,
};
use crate::paillier::{self, Plaintext, PublicKey};
use crate::rng::{derive_seed, SplitMix64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_THRESHOLD: i32 = 4;

/// Environment variable that overrides the encrypt-dataset output directory.
pub const OUT_DIR_ENV: &str = "CIPHERTRAIN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "ciphertrain",
    version,
    about = "Encrypt image datasets with Paillier and train a compact classifier on them"
)]
struct Cli {
    /// Versioned key-value config file; explicit flags win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Paillier key pair and write both key files.
    Keygen(KeygenArgs),
    /// Split a folder-of-class-folders dataset and materialize a plain or
    /// encrypted copy with its manifest.
    EncryptDataset(EncryptDatasetArgs),
    /// Train the classifier on a materialized dataset.
    Train(TrainArgs),
    /// Evaluate saved weights on one split and write the report.
    Evaluate(EvaluateArgs),
    /// Compare two classification reports against a gap threshold.
    Compare(CompareArgs),
    /// Pretty-print a stored report file (classification, comparison, or
    /// training curves).
    Report(ReportArgs),
}

#[derive(Args)]
struct KeygenArgs {
    /// Prime size in bits (the modulus n gets twice this). Minimum 16.
    #[arg(long)]
    bits: Option<u64>,
    /// Seed for reproducible key generation; omit for OS entropy.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    public_out: Option<PathBuf>,
    #[arg(long)]
    private_out: Option<PathBuf>,
}

#[derive(Args)]
struct EncryptDatasetArgs {
    /// Dataset root: one subdirectory per class.
    #[arg(long)]
    root: Option<PathBuf>,
    /// Output directory for the materialized copy.
    #[arg(long)]
    out: Option<PathBuf>,
    /// plain, deterministic, or randomized.
    #[arg(long)]
    mode: Option<String>,
    /// Public key file (required for the encrypted modes).
    #[arg(long)]
    key: Option<PathBuf>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Seed for the substitution table (deterministic mode) or the per-pixel
    /// randomizers (randomized mode).
    #[arg(long)]
    table_seed: Option<u64>,
    /// Comma-separated train,val,test fractions.
    #[arg(long)]
    ratios: Option<String>,
    /// With randomized mode, also write low-byte view PNGs.
    #[arg(long)]
    emit_view: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Materialized dataset directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Manifest path; defaults to <dataset>/manifest.txt.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    weights_out: Option<PathBuf>,
    /// Per-epoch curve data (JSON).
    #[arg(long)]
    curves_out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// sgd, sgd-momentum[:beta], or adam[:beta1,beta2,epsilon].
    #[arg(long)]
    optimizer: Option<String>,
    /// Square resize applied to every image.
    #[arg(long)]
    input_size: Option<usize>,
    /// Drives weight init and epoch shuffling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// train, val, or test.
    #[arg(long)]
    split: Option<String>,
    /// Report output (JSON); the confusion matrix lands next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Classification report of the plain-data run.
    #[arg(long)]
    plain: Option<PathBuf>,
    /// Classification report of the encrypted-data run.
    #[arg(long)]
    encrypted: Option<PathBuf>,
    /// Maximum tolerated |accuracy gap|.
    #[arg(long)]
    threshold: Option<f64>,
    /// Optional comparison report output (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Stored report file to pretty-print.
    #[arg(long)]
    input: PathBuf,
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Entry point with explicit arguments, for tests.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match FileConfig::load(cli.config.as_deref()) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match dispatch(cli.command, &config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalDivergence => EXIT_NUMERIC,
                Error::Config(_) | Error::BadRatios => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn dispatch(command: Command, config: &FileConfig) -> Result<i32> {
    match command {
        Command::Keygen(args) => cmd_keygen(args, config),
        Command::EncryptDataset(args) => cmd_encrypt_dataset(args, config),
        Command::Train(args) => cmd_train(args, config),
        Command::Evaluate(args) => cmd_evaluate(args, config),
        Command::Compare(args) => cmd_compare(args, config),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_keygen(args: KeygenArgs, config: &FileConfig) -> Result<i32> {
    let bits = pick(args.bits, config.u64("key-bits")?, 1024);
    if bits < 16 {
        return Err(Error::Config(format!(
            "--bits {bits} is below the minimum of 16"
        )));
    }
    let seed = match args.seed.or(config.u64("key-seed")?) {
        Some(s) => s,
        None => SplitMix64::from_entropy().next_u64(),
    };
    let public_out = pick(args.public_out, config.path("public-key")?, "public.key".into());
    let private_out = pick(args.private_out, config.path("private-key")?, "private.key".into());

    let mut rng = SplitMix64::new(seed);
    let (pk, sk) = paillier::keygen(bits, &mut rng)?;

    // round-trip self-test on 100 random plaintexts before anything is written
    let mut sample_rng = SplitMix64::new(derive_seed(seed, 0x5e1f));
    let samples: Vec<(Plaintext, u64)> = (0..100)
        .map(|i| {
            let m = sample_rng.next_biguint_range(&num_bigint::BigUint::ZERO, pk.n());
            (Plaintext(m), derive_seed(seed, 1000 + i))
        })
        .collect();
    let all_ok = samples
        .par_iter()
        .map(|(m, enc_seed)| {
            let c = paillier::encrypt_random(&pk, m, &mut SplitMix64::new(*enc_seed))?;
            Ok(paillier::decrypt(&sk, &pk, &c)? == *m)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|ok| ok);
    if !all_ok {
        return Err(Error::CorruptCiphertext);
    }

    pk.save(&public_out)?;
    sk.save(&pk, &private_out)?;
    println!("fingerprint: {}", pk.fingerprint());
    println!("public key:  {}", public_out.display());
    println!("private key: {}", private_out.display());
    Ok(EXIT_OK)
}

fn cmd_encrypt_dataset(args: EncryptDatasetArgs, config: &FileConfig) -> Result<i32> {
    let root = require(args.root.or(config.path("root")?), "--root")?;
    let out = args
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or(config.path("out-dir")?)
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let mode_name = pick(args.mode, config.string("mode")?, "deterministic".into());
    let split_seed = pick(args.split_seed, config.u64("split-seed")?, 0);
    let table_seed = pick(args.table_seed, config.u64("table-seed")?, 0);
    let ratios = parse_ratios(&pick(
        args.ratios,
        config.string("ratios")?,
        "0.8,0.1,0.1".into(),
    ))?;

    let ingested = dataset::ingest(&root)?;
    let manifest = dataset::split(&ingested, ratios, split_seed)?;

    let load_public_key = || -> Result<PublicKey> {
        let key_path = require(args.key.clone().or(config.path("public-key")?), "--key")?;
        PublicKey::load(&key_path)
    };
    let written = match mode_name.as_str() {
        "plain" => dataset::materialize(&manifest, MaterializeMode::Plain, &root, &out)?,
        "deterministic" => {
            let pk = load_public_key()?;
            let table = build_substitution_table(&pk, table_seed)?;
            dataset::materialize(&manifest, MaterializeMode::Deterministic(&table), &root, &out)?
        }
        "randomized" => {
            let pk = load_public_key()?;
            dataset::materialize(
                &manifest,
                MaterializeMode::Randomized {
                    public_key: &pk,
                    seed: table_seed,
                    emit_view: args.emit_view,
                },
                &root,
                &out,
            )?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown mode {other:?} (plain, deterministic, randomized)"
            )))
        }
    };

    println!("materialized {} ({mode_name}) -> {}", root.display(), out.display());
    print_split_summary(&written);
    Ok(EXIT_OK)
}

fn print_split_summary(manifest: &DatasetManifest) {
    let width = manifest
        .classes
        .iter()
        .map(|c| c.len())
        .chain(["Class".len()])
        .max()
        .unwrap();
    println!("{:<width$}  {:>9}  {:>10}  {:>8}", "Class", "Training", "Validation", "Testing");
    for (class, counts) in manifest.split_counts() {
        println!(
            "{class:<width$}  {:>9}  {:>10}  {:>8}",
            counts[0], counts[1], counts[2]
        );
    }
}

fn cmd_train(args: TrainArgs, config: &FileConfig) -> Result<i32> {
    let dataset_dir = require(args.dataset.or(config.path("dataset")?), "--dataset")?;
    let manifest_path = args
        .manifest
        .or(config.path("manifest")?)
        .unwrap_or_else(|| dataset_dir.join(MANIFEST_FILE));
    let weights_out = pick(args.weights_out, config.path("weights-out")?, "weights.ctwt".into());
    let curves_out = pick(args.curves_out, config.path("curves-out")?, "train_report.json".into());

    let defaults = TrainConfig::default();
    let train_config = TrainConfig {
        epochs: pick(args.epochs, config.usize("epochs")?, defaults.epochs),
        batch_size: pick(args.batch_size, config.usize("batch-size")?, defaults.batch_size),
        learning_rate: pick(
            args.learning_rate,
            config.f64("learning-rate")?,
            defaults.learning_rate,
        ),
        optimizer: parse_optimizer(&pick(
            args.optimizer,
            config.string("optimizer")?,
            "adam".into(),
        ))?,
        input_size: pick(args.input_size, config.usize("input-size")?, defaults.input_size),
        seed: pick(args.seed, config.u64("train-seed")?, defaults.seed),
        shuffle_each_epoch: true,
    };
    train_config.validate()?;

    let manifest = DatasetManifest::load(&manifest_path)?;
    let channels = detect_channels(&manifest, &dataset_dir)?;
    let mut net = build_default_net(
        train_config.input_size,
        channels,
        manifest.classes.len(),
        derive_seed(train_config.seed, 0x1417),
    )?;
    let report = nn::train(&mut net, &manifest, &dataset_dir, &train_config)?;

    save_weights(&weights_out, &report.best_weights)?;
    report.save_curves(&curves_out)?;
    let best = &report.per_epoch[report.best_epoch];
    println!(
        "trained {} epochs; best val accuracy {:.4} at epoch {}",
        report.per_epoch.len(),
        best.val_accuracy,
        report.best_epoch
    );
    println!("weights: {}", weights_out.display());
    println!("curves:  {}", curves_out.display());
    Ok(EXIT_OK)
}

/// Channel count from the first train-split image (view PNGs for randomized
/// datasets).
fn detect_channels(manifest: &DatasetManifest, root: &Path) -> Result<usize> {
    let entry = manifest
        .entries_for(Split::Train)
        .next()
        .ok_or_else(|| Error::Config("train split is empty".into()))?;
    let rel = if entry.path.ends_with(".cimg") {
        entry.path.replace(".cimg", ".view.png")
    } else {
        entry.path.clone()
    };
    Ok(crate::imageio::load_image(&root.join(rel))?.channels)
}

fn cmd_evaluate(args: EvaluateArgs, config: &FileConfig) -> Result<i32> {
    let weights_path = require(args.weights.or(config.path("weights-out")?), "--weights")?;
    let dataset_dir = require(args.dataset.or(config.path("dataset")?), "--dataset")?;
    let manifest_path = args
        .manifest
        .or(config.path("manifest")?)
        .unwrap_or_else(|| dataset_dir.join(MANIFEST_FILE));
    let split: Split = pick(args.split, config.string("split")?, "test".into()).parse()?;
    let out = pick(args.out, config.path("report-out")?, "report.json".into());

    let net = load_weights(&weights_path)?;
    let manifest = DatasetManifest::load(&manifest_path)?;
    let prediction = nn::predict(&net, &manifest, &dataset_dir, split, net.input_size())?;
    let cm = metrics::confusion(&prediction.truth, &prediction.predictions, &manifest.classes)?;
    let report = metrics::report(&cm)?;

    report.save(&out)?;
    let confusion_out = confusion_path(&out);
    let json = serde_json::to_string_pretty(&cm).expect("matrix serializes");
    fs::write(&confusion_out, json).map_err(|e| Error::io(&confusion_out, e))?;

    print!("{report}");
    println!("report:    {}", out.display());
    println!("confusion: {}", confusion_out.display());
    Ok(EXIT_OK)
}

fn confusion_path(report_path: &Path) -> PathBuf {
    let stem = report_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    report_path.with_file_name(format!("{stem}.confusion.json"))
}

fn cmd_compare(args: CompareArgs, config: &FileConfig) -> Result<i32> {
    let plain_path = require(args.plain, "--plain")?;
    let encrypted_path = require(args.encrypted, "--encrypted")?;
    let threshold = pick(args.threshold, config.f64("threshold")?, 0.05);

    let plain = ClassificationReport::load(&plain_path)?;
    let encrypted = ClassificationReport::load(&encrypted_path)?;
    let comparison = metrics::compare(&plain, &encrypted, threshold)?;
    if let Some(out) = args.out.or(config.path("comparison-out")?) {
        comparison.save(&out)?;
    }
    print!("{comparison}");
    Ok(if comparison.within_threshold {
        EXIT_OK
    } else {
        EXIT_THRESHOLD
    })
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.input).map_err(|e| Error::io(&args.input, e))?;
    if let Ok(report) = serde_json::from_str::<ClassificationReport>(&text) {
        print!("{report}");
    } else if let Ok(comparison) = serde_json::from_str::<ComparisonReport>(&text) {
        print!("{comparison}");
    } else if let Ok(curves) = serde_json::from_str::<TrainCurves>(&text) {
        print!("{curves}");
    } else if let Ok(cm) = serde_json::from_str::<ConfusionMatrix>(&text) {
        match metrics::report(&cm) {
            Ok(report) => print!("{report}"),
            Err(_) => println!("empty confusion matrix"),
        }
    } else {
        return Err(Error::Config(format!(
            "{} is not a recognized report file",
            args.input.display()
        )));
    }
    Ok(EXIT_OK)
}

// --- config file --------------------------------------------------------------
//
//   ciphertrain-config 1
//   # comment
//   epochs = 30
//   ratios = 0.8,0.1,0.1
//
// Unknown keys are rejected so typos fail loudly.

const KNOWN_KEYS: [&str; 18] = [
    "key-bits",
    "key-seed",
    "public-key",
    "private-key",
    "root",
    "out-dir",
    "mode",
    "split-seed",
    "table-seed",
    "ratios",
    "dataset",
    "manifest",
    "weights-out",
    "curves-out",
    "report-out",
    "comparison-out",
    "threshold",
    "split",
];
const KNOWN_TRAIN_KEYS: [&str; 6] = [
    "epochs",
    "batch-size",
    "learning-rate",
    "optimizer",
    "input-size",
    "train-seed",
];

#[derive(Default)]
struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        match lines.next() {
            Some("ciphertrain-config 1") => {}
            other => {
                return Err(Error::Config(format!(
                    "config must start with 'ciphertrain-config 1', found {other:?}"
                )))
            }
        }
        let mut values = BTreeMap::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed config line {line:?}")))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) && !KNOWN_TRAIN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown config key {key:?}")));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("duplicate config key {key:?}")));
            }
        }
        Ok(FileConfig { values })
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        Ok(self.values.get(key).cloned())
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.values.get(key).map(PathBuf::from))
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse_with(key, str::parse::<u64>)
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_with(key, str::parse::<usize>)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, str::parse::<f64>)
    }

    fn parse_with<T, E>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, E>) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                parse(v).map_err(|_| Error::Config(format!("config key {key:?}: bad value {v:?}")))
            })
            .transpose()
    }
}

fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("{flag} is required")))
}

fn parse_ratios(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bad ratios {text:?}")))?;
    let [train, val, test] = parts[..] else {
        return Err(Error::Config(format!(
            "ratios need exactly three values, got {text:?}"
        )));
    };
    Ok([train, val, test])
}

fn parse_optimizer(text: &str) -> Result<OptimizerKind> {
    let (name, params) = match text.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (text, None),
    };
    match name {
        "sgd" => Ok(OptimizerKind::Sgd),
        "sgd-momentum" => {
            let beta = params.map(str::parse::<f64>).transpose().map_err(|_| {
                Error::Config(format!("bad momentum parameter in {text:?}"))
            })?;
            Ok(OptimizerKind::SgdMomentum {
                beta: beta.unwrap_or(0.9),
            })
        }
        "adam" => {
            let defaults = (0.9, 0.999, 1e-8);
            let (beta1, beta2, epsilon) = match params {
                None => defaults,
                Some(p) => {
                    let values: Vec<f64> = p
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::Config(format!("bad adam parameters in {text:?}")))?;
                    match values[..] {
                        [b1, b2] => (b1, b2, defaults.2),
                        [b1, b2, eps] => (b1, b2, eps),
                        _ => {
                            return Err(Error::Config(format!(
                                "adam takes beta1,beta2[,epsilon], got {text:?}"
                            )))
                        }
                    }
                }
            };
            Ok(OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            })
        }
        other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
    }
}
