//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`).
//!
//! Run with:
//!
//! ```bash
//! cargo test --release --test acceptance -- --nocapture
//! ```

use std::path::Path;
use std::time::Instant;

use num_bigint::BigUint;
use rayon::prelude::*;

use ciphertrain::dataset::{self, MaterializeMode, Split};
use ciphertrain::image_crypto::{
    build_substitution_table, encrypt_image_deterministic, ImageTensor,
};
use ciphertrain::metrics;
use ciphertrain::nn::{self, build_default_net, TrainConfig};
use ciphertrain::paillier::{self, Plaintext};
use ciphertrain::rng::{derive_seed, SplitMix64};
use ciphertrain::synthetic;

fn pass(criterion: u32, detail: &str) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}

/// Naive u128 modular arithmetic, independent of the library's number
/// theory. Only valid for word-sized toy keys.
mod oracle {
    pub fn mod_pow(mut base: u128, mut exp: u128, modulus: u128) -> u128 {
        let mut acc = 1u128;
        base %= modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % modulus;
            }
            base = base * base % modulus;
            exp >>= 1;
        }
        acc
    }

    pub fn encrypt(n: u128, g: u128, m: u128, r: u128) -> u128 {
        mod_pow(g, m, n * n) * mod_pow(r, n, n * n) % (n * n)
    }

    pub fn decrypt(n: u128, lambda: u128, mu: u128, c: u128) -> Option<u128> {
        let u = mod_pow(c, lambda, n * n);
        if !(u - 1).is_multiple_of(n) {
            return None;
        }
        Some((u - 1) / n * mu % n)
    }
}

/// Criterion 1: homomorphic addition over 1,000 random plaintext pairs under
/// a 512-bit-per-prime key, exact, in under 60 seconds.
#[test]
fn acceptance_1_homomorphic_addition() {
    let start = Instant::now();
    let (pk, sk) = paillier::keygen(512, &mut SplitMix64::new(0xADD)).unwrap();

    let mut m_rng = SplitMix64::new(1);
    let cases: Vec<(Plaintext, Plaintext, u64)> = (0..1000)
        .map(|i| {
            (
                Plaintext(m_rng.next_biguint_range(&BigUint::ZERO, pk.n())),
                Plaintext(m_rng.next_biguint_range(&BigUint::ZERO, pk.n())),
                derive_seed(0xADD1, i),
            )
        })
        .collect();

    let failures = cases
        .par_iter()
        .filter(|(m1, m2, seed)| {
            let mut rng = SplitMix64::new(*seed);
            let c1 = paillier::encrypt_random(&pk, m1, &mut rng).unwrap();
            let c2 = paillier::encrypt_random(&pk, m2, &mut rng).unwrap();
            let sum = paillier::hadd(&pk, &c1, &c2).unwrap();
            let decrypted = paillier::decrypt(&sk, &pk, &sum).unwrap();
            decrypted.0 != (&m1.0 + &m2.0) % pk.n()
        })
        .count();
    let elapsed = start.elapsed();

    assert_eq!(failures, 0, "homomorphic addition failed {failures} times");
    assert!(
        elapsed.as_secs() < 60,
        "took {elapsed:?}, budget is 60 s"
    );
    pass(1, &format!("1000 pairs exact in {elapsed:.2?}"));
}

/// Criterion 2: plaintext-addition identity over the same protocol.
#[test]
fn acceptance_2_plaintext_addition() {
    let start = Instant::now();
    let (pk, sk) = paillier::keygen(512, &mut SplitMix64::new(0xADD)).unwrap();

    let mut m_rng = SplitMix64::new(2);
    let cases: Vec<(Plaintext, Plaintext, u64)> = (0..1000)
        .map(|i| {
            (
                Plaintext(m_rng.next_biguint_range(&BigUint::ZERO, pk.n())),
                Plaintext(m_rng.next_biguint_range(&BigUint::ZERO, pk.n())),
                derive_seed(0xADD2, i),
            )
        })
        .collect();

    let failures = cases
        .par_iter()
        .filter(|(m1, m2, seed)| {
            let mut rng = SplitMix64::new(*seed);
            let c1 = paillier::encrypt_random(&pk, m1, &mut rng).unwrap();
            let sum = paillier::scalar_add(&pk, &c1, m2).unwrap();
            let decrypted = paillier::decrypt(&sk, &pk, &sum).unwrap();
            decrypted.0 != (&m1.0 + &m2.0) % pk.n()
        })
        .count();
    let elapsed = start.elapsed();

    assert_eq!(failures, 0, "plaintext addition failed {failures} times");
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget is 60 s");
    pass(2, &format!("1000 pairs exact in {elapsed:.2?}"));
}

/// Criterion 3: toy-key exactness against the naive oracle, including the
/// exhaustive round trip over all m in [0, 34] and r in {1, 2, 3, 4, 6}.
#[test]
fn acceptance_3_toy_key_exactness() {
    let five = BigUint::from(5u8);
    let seven = BigUint::from(7u8);
    let g = BigUint::from(36u8);
    let (pk, sk) = paillier::from_primes(&five, &seven, &g).unwrap();

    assert_eq!(*pk.n(), BigUint::from(35u8));
    assert_eq!(*sk.lambda(), BigUint::from(12u8));
    assert_eq!(*sk.mu(), BigUint::from(3u8));

    // oracle agrees on the key material: L(36^12 mod 1225) = 12, 12^-1 = 3
    let u = oracle::mod_pow(36, 12, 1225);
    assert_eq!(u, 421);
    assert_eq!((u - 1) / 35, 12);
    assert_eq!(12 * 3 % 35, 1);

    let c = paillier::encrypt(&pk, &Plaintext::from(3u64), &BigUint::from(4u8)).unwrap();
    assert_eq!(c.value, BigUint::from(44u8));
    assert_eq!(oracle::encrypt(35, 36, 3, 4), 44);
    assert_eq!(paillier::decrypt(&sk, &pk, &c).unwrap().0, BigUint::from(3u8));
    assert_eq!(oracle::decrypt(35, 12, 3, 44), Some(3));

    let mut checked = 0;
    for m in 0u64..35 {
        for r in [1u64, 2, 3, 4, 6] {
            let c = paillier::encrypt(&pk, &Plaintext::from(m), &BigUint::from(r)).unwrap();
            let expected = oracle::encrypt(35, 36, m as u128, r as u128);
            assert_eq!(c.value, BigUint::from(expected), "ciphertext m={m} r={r}");
            assert_eq!(
                paillier::decrypt(&sk, &pk, &c).unwrap().0,
                BigUint::from(m),
                "round trip m={m} r={r}"
            );
            assert_eq!(oracle::decrypt(35, 12, 3, expected), Some(m as u128));
            checked += 1;
        }
    }
    assert_eq!(checked, 175);
    pass(3, "toy key (n=35, lambda=12, mu=3), 175 round trips vs oracle");
}

/// Criterion 4: substitution tables are permutations for 100 random
/// (key, seed) pairs, and encrypt-then-inverse restores 20 random images.
#[test]
fn acceptance_4_substitution_table() {
    let table_for = |i: u64| {
        let (pk, _) = paillier::keygen(16, &mut SplitMix64::new(derive_seed(0x7AB, i))).unwrap();
        build_substitution_table(&pk, derive_seed(0x5EED, i)).unwrap()
    };

    for i in 0..100 {
        let table = table_for(i);
        let mut sorted: Vec<u8> = table.table().to_vec();
        sorted.sort_unstable();
        let identity: Vec<u8> = (0..=255).collect();
        assert_eq!(sorted, identity, "table {i} is not a permutation");
    }

    let mut img_rng = SplitMix64::new(0x1316);
    for i in 0..20 {
        let table = table_for(i);
        let inverse = table.inverse();
        let pixels: Vec<u8> = (0..24 * 24).map(|_| img_rng.next_below(256) as u8).collect();
        let img = ImageTensor::new(24, 24, 1, pixels).unwrap();
        let encrypted = encrypt_image_deterministic(&img, &table);
        let recovered = encrypt_image_deterministic(&encrypted, &inverse);
        assert_eq!(recovered, img, "image {i} did not round-trip");
    }
    pass(4, "100 permutations, 20 bit-exact image round trips");
}

/// Criterion 5: analytic gradients match central finite differences on the
/// default 8x8 2-class net, elementwise, over 10 seeds.
#[test]
fn acceptance_5_gradient_correctness() {
    let h = 1e-5;
    for seed in 0..10u64 {
        let mut net = build_default_net(8, 1, 2, derive_seed(0x60AD, seed)).unwrap();
        let mut rng = SplitMix64::new(derive_seed(0xDA7A, seed));
        let batch: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..64).map(|_| rng.next_f64()).collect())
            .collect();
        let labels: Vec<usize> = (0..4).map(|_| rng.next_below(2) as usize).collect();

        let (_, grads) = nn::loss_and_gradients(&net, &batch, &labels).unwrap();
        let loss_of = |net: &nn::NetworkParams| -> f64 {
            let probs = nn::forward(net, &batch).unwrap();
            probs
                .iter()
                .zip(&labels)
                .map(|(p, &y)| -p[y].ln())
                .sum::<f64>()
                / batch.len() as f64
        };

        for layer_idx in net.trainable_layer_indices() {
            for (param_idx, &analytic) in grads[layer_idx].clone().iter().enumerate() {
                let original = *net.param_mut(layer_idx, param_idx);
                *net.param_mut(layer_idx, param_idx) = original + h;
                let plus = loss_of(&net);
                *net.param_mut(layer_idx, param_idx) = original - h;
                let minus = loss_of(&net);
                *net.param_mut(layer_idx, param_idx) = original;

                let numeric = (plus - minus) / (2.0 * h);
                let abs_err = (analytic - numeric).abs();
                let rel = abs_err / analytic.abs().max(numeric.abs()).max(1e-12);
                assert!(
                    rel < 1e-4 || abs_err < 1e-9,
                    "seed {seed} layer {layer_idx} param {param_idx}: \
                     analytic {analytic:e}, numeric {numeric:e}, rel {rel:e}"
                );
            }
        }
    }
    pass(5, "10 seeds, every parameter within 1e-4 of finite differences");
}

/// Criterion 6: split counts within +-1 of ratio*N for the reference class
/// sizes, exact val/test = 350 for N = 3501, and byte-identical manifests.
#[test]
fn acceptance_6_split_fidelity() {
    let sizes = [3501usize, 6003, 6754, 1204];
    let ingested = dataset::IngestedDataset {
        classes: (0..sizes.len()).map(|i| format!("class_{i}")).collect(),
        files: sizes
            .iter()
            .map(|&n| (0..n).map(|i| format!("f{i:05}.png")).collect())
            .collect(),
    };
    let ratios = [0.8, 0.1, 0.1];
    let manifest = dataset::split(&ingested, ratios, 20_24).unwrap();

    for (class_idx, (_, counts)) in manifest.split_counts().iter().enumerate() {
        let n = sizes[class_idx] as f64;
        for (slot, ratio) in counts.iter().zip(ratios) {
            assert!(
                (*slot as f64 - ratio * n).abs() <= 1.0,
                "class {class_idx}: split {slot} vs expected {}",
                ratio * n
            );
        }
        assert_eq!(counts.iter().sum::<usize>(), sizes[class_idx]);
    }
    let first = manifest.split_counts();
    assert_eq!(first[0].1, [2801, 350, 350], "N=3501 must split 2801/350/350");

    let again = dataset::split(&ingested, ratios, 20_24).unwrap();
    assert_eq!(manifest.to_text(), again.to_text(), "manifest must be byte-stable");
    pass(6, "all four class sizes within +-1, 3501 -> 2801/350/350, byte-stable");
}

struct GapExperiment {
    plain_accuracy: f64,
    encrypted_accuracy: f64,
}

/// Shared setup for criteria 7 and 8: the synthetic 4-class dataset,
/// generated once per call into a fresh temp dir.
fn synthetic_root(dir: &Path) {
    synthetic::generate_dataset(dir, 400, 64, 0xF1C).unwrap();
}

fn train_and_test_accuracy(
    manifest: &dataset::DatasetManifest,
    root: &Path,
    net_seed: u64,
) -> f64 {
    let config = TrainConfig::default();
    let mut net = build_default_net(config.input_size, 1, manifest.classes.len(), net_seed).unwrap();
    let report = nn::train(&mut net, manifest, root, &config).unwrap();
    let out = nn::predict(
        &report.best_weights,
        manifest,
        root,
        Split::Test,
        config.input_size,
    )
    .unwrap();
    let correct = out
        .predictions
        .iter()
        .zip(&out.truth)
        .filter(|(p, t)| p == t)
        .count();
    correct as f64 / out.predictions.len() as f64
}

/// Criterion 7: desk-scale accuracy-gap experiment. Plain test accuracy at
/// least 0.90 and a plain-vs-deterministic-encrypted gap of at most 0.05,
/// under the default train config, in under 15 minutes.
#[test]
fn acceptance_7_accuracy_gap() {
    let start = Instant::now();
    let result = run_gap_experiment();
    let elapsed = start.elapsed();

    assert!(
        result.plain_accuracy >= 0.90,
        "plain accuracy {:.4} below 0.90",
        result.plain_accuracy
    );
    let gap = (result.plain_accuracy - result.encrypted_accuracy).abs();
    assert!(
        gap <= 0.05,
        "accuracy gap {gap:.4} exceeds 0.05 (plain {:.4}, encrypted {:.4})",
        result.plain_accuracy,
        result.encrypted_accuracy
    );
    assert!(
        elapsed.as_secs() < 900,
        "took {elapsed:?}, budget is 15 min"
    );
    pass(
        7,
        &format!(
            "plain {:.4}, encrypted {:.4}, gap {gap:.4}, {elapsed:.0?}",
            result.plain_accuracy, result.encrypted_accuracy
        ),
    );
}

fn run_gap_experiment() -> GapExperiment {
    let source = tempfile::tempdir().unwrap();
    synthetic_root(source.path());
    let ingested = dataset::ingest(source.path()).unwrap();
    let manifest = dataset::split(&ingested, [0.8, 0.1, 0.1], 0x5711).unwrap();

    let plain_dir = tempfile::tempdir().unwrap();
    let plain_manifest = dataset::materialize(
        &manifest,
        MaterializeMode::Plain,
        source.path(),
        plain_dir.path(),
    )
    .unwrap();

    let (pk, _) = paillier::keygen(16, &mut SplitMix64::new(0x6A9)).unwrap();
    let table = build_substitution_table(&pk, 0x7AB1E).unwrap();
    let enc_dir = tempfile::tempdir().unwrap();
    let enc_manifest = dataset::materialize(
        &manifest,
        MaterializeMode::Deterministic(&table),
        source.path(),
        enc_dir.path(),
    )
    .unwrap();

    GapExperiment {
        plain_accuracy: train_and_test_accuracy(&plain_manifest, plain_dir.path(), 0x11E7),
        encrypted_accuracy: train_and_test_accuracy(&enc_manifest, enc_dir.path(), 0x11E7),
    }
}

/// Criterion 8: randomized-mode low-byte views are unlearnable; test
/// accuracy lands within 0.08 of chance (0.25) on the same dataset.
#[test]
fn acceptance_8_unlearnability_control() {
    let source = tempfile::tempdir().unwrap();
    synthetic_root(source.path());
    let ingested = dataset::ingest(source.path()).unwrap();
    let manifest = dataset::split(&ingested, [0.8, 0.1, 0.1], 0x5711).unwrap();

    let (pk, _) = paillier::keygen(16, &mut SplitMix64::new(0x6A9)).unwrap();
    let rand_dir = tempfile::tempdir().unwrap();
    let rand_manifest = dataset::materialize(
        &manifest,
        MaterializeMode::Randomized {
            public_key: &pk,
            seed: 0xF8E5,
            emit_view: true,
        },
        source.path(),
        rand_dir.path(),
    )
    .unwrap();

    let accuracy = train_and_test_accuracy(&rand_manifest, rand_dir.path(), 0x11E7);
    assert!(
        (accuracy - 0.25).abs() <= 0.08,
        "view-trained accuracy {accuracy:.4} is not chance-level"
    );
    pass(8, &format!("view-trained test accuracy {accuracy:.4} vs chance 0.25"));
}

/// Criterion 9: report() matches brute-force recomputation on 1,000 random
/// label vectors, and the reference accuracy pair reports gap 0.010.
#[test]
fn acceptance_9_metrics_oracle() {
    let mut rng = SplitMix64::new(0x3147);
    for case in 0..1000 {
        let k = 1 + rng.next_below(5) as usize;
        let len = 1 + rng.next_below(50) as usize;
        let classes: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let truth: Vec<usize> = (0..len).map(|_| rng.next_below(k as u64) as usize).collect();
        let pred: Vec<usize> = (0..len).map(|_| rng.next_below(k as u64) as usize).collect();

        let report =
            metrics::report(&metrics::confusion(&truth, &pred, &classes).unwrap()).unwrap();

        // brute force straight from the label vectors
        let total = len as f64;
        let mut correct = 0usize;
        for (t, p) in truth.iter().zip(&pred) {
            if t == p {
                correct += 1;
            }
        }
        assert_eq!(report.accuracy, correct as f64 / total, "case {case}");
        let mut f1_sum = 0.0;
        let mut f1_weighted_sum = 0.0;
        for c in 0..k {
            let tp = truth
                .iter()
                .zip(&pred)
                .filter(|(&t, &p)| t == c && p == c)
                .count() as f64;
            let pred_c = pred.iter().filter(|&&p| p == c).count() as f64;
            let true_c = truth.iter().filter(|&&t| t == c).count() as f64;
            let precision = if pred_c > 0.0 { tp / pred_c } else { 0.0 };
            let recall = if true_c > 0.0 { tp / true_c } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            let m = &report.per_class[c];
            assert_eq!(m.precision, precision, "case {case} class {c}");
            assert_eq!(m.recall, recall, "case {case} class {c}");
            assert_eq!(m.f1, f1, "case {case} class {c}");
            assert_eq!(m.support, true_c as u64, "case {case} class {c}");
            f1_sum += f1;
            f1_weighted_sum += f1 * true_c;
        }
        assert_eq!(report.macro_avg.f1, f1_sum / k as f64, "case {case}");
        assert_eq!(report.weighted_avg.f1, f1_weighted_sum / total, "case {case}");
    }

    // the reference comparison: accuracies 0.942 vs 0.932 -> gap 0.010
    let classes = vec!["a".to_string()];
    let mk = |accuracy: f64| metrics::ClassificationReport {
        classes: classes.clone(),
        per_class: vec![metrics::ClassMetrics {
            precision: accuracy,
            recall: accuracy,
            f1: accuracy,
            support: 1748,
        }],
        accuracy,
        macro_avg: metrics::AverageMetrics {
            precision: accuracy,
            recall: accuracy,
            f1: accuracy,
        },
        weighted_avg: metrics::AverageMetrics {
            precision: accuracy,
            recall: accuracy,
            f1: accuracy,
        },
        total_support: 1748,
    };
    let comparison = metrics::compare(&mk(0.942), &mk(0.932), 0.02).unwrap();
    assert!((comparison.accuracy_gap - 0.010).abs() < 1e-12);
    assert!(comparison.within_threshold);
    pass(9, "1000 brute-force matches, reference gap 0.010");
}

/// Criterion 10: the CLI pipeline (keygen, encrypt-dataset x2, train x2,
/// evaluate x2, compare, report) exits 0 at every stage and is byte-identical
/// across two runs with the same seeds.
#[test]
fn acceptance_10_cli_pipeline() {
    let fixture = tempfile::tempdir().unwrap();
    synthetic::generate_dataset(fixture.path(), 30, 32, 0xF17).unwrap();

    let run_pipeline = |work: &Path| {
        let bin = env!("CARGO_BIN_EXE_ciphertrain");
        let run = |args: &[&str]| {
            let output = std::process::Command::new(bin)
                .args(args)
                .current_dir(work)
                .env_remove("CIPHERTRAIN_OUT_DIR")
                .output()
                .expect("binary runs");
            assert_eq!(
                output.status.code(),
                Some(0),
                "command {args:?} failed:\nstdout: {}\nstderr: {}",
                String::from_utf8_lossy(&output.stdout),
                String::from_utf8_lossy(&output.stderr),
            );
        };
        let fixture_path = fixture.path().to_str().unwrap().to_string();

        run(&[
            "keygen", "--bits", "512", "--seed", "7",
            "--public-out", "public.key", "--private-out", "private.key",
        ]);
        run(&[
            "encrypt-dataset", "--root", &fixture_path, "--out", "plain",
            "--mode", "plain", "--split-seed", "5",
        ]);
        run(&[
            "encrypt-dataset", "--root", &fixture_path, "--out", "encrypted",
            "--mode", "deterministic", "--key", "public.key",
            "--split-seed", "5", "--table-seed", "9",
        ]);
        for name in ["plain", "encrypted"] {
            run(&[
                "train", "--dataset", name,
                "--weights-out", &format!("{name}.ctwt"),
                "--curves-out", &format!("{name}_curves.json"),
                "--epochs", "4", "--batch-size", "16", "--input-size", "32",
                "--seed", "1",
            ]);
            run(&[
                "evaluate", "--weights", &format!("{name}.ctwt"),
                "--dataset", name, "--split", "test",
                "--out", &format!("{name}_report.json"),
            ]);
        }
        run(&[
            "compare", "--plain", "plain_report.json",
            "--encrypted", "encrypted_report.json",
            "--threshold", "1.0", "--out", "comparison.json",
        ]);
        run(&["report", "--input", "plain_report.json"]);
        run(&["report", "--input", "comparison.json"]);
        run(&["report", "--input", "plain_curves.json"]);
    };

    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    run_pipeline(first.path());
    run_pipeline(second.path());

    // byte-reproducibility of every artifact, manifests included
    let artifacts = [
        "public.key",
        "private.key",
        "plain/manifest.txt",
        "encrypted/manifest.txt",
        "plain.ctwt",
        "encrypted.ctwt",
        "plain_curves.json",
        "encrypted_curves.json",
        "plain_report.json",
        "encrypted_report.json",
        "comparison.json",
    ];
    for name in artifacts {
        let a = std::fs::read(first.path().join(name)).unwrap();
        let b = std::fs::read(second.path().join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between runs");
    }
    // spot-check a materialized image from each copy as well
    for copy in ["plain", "encrypted"] {
        let manifest =
            dataset::DatasetManifest::load(&first.path().join(copy).join("manifest.txt")).unwrap();
        let entry = manifest.entries_for(Split::Train).next().unwrap();
        let rel = format!("{copy}/{}", entry.path);
        let a = std::fs::read(first.path().join(&rel)).unwrap();
        let b = std::fs::read(second.path().join(&rel)).unwrap();
        assert_eq!(a, b, "materialized image {rel} differs between runs");
    }

    pass(10, "pipeline exit 0 at every stage, byte-identical artifacts");
}

/// The comparison CLI exits 4 on a threshold breach (stable exit-code
/// contract for scripting).
#[test]
fn compare_exit_code_on_breach() {
    let dir = tempfile::tempdir().unwrap();
    let classes = vec!["a".to_string(), "b".to_string()];
    let mk = |accuracy: f64| metrics::ClassificationReport {
        classes: classes.clone(),
        per_class: classes
            .iter()
            .map(|_| metrics::ClassMetrics {
                precision: accuracy,
                recall: accuracy,
                f1: accuracy,
                support: 10,
            })
            .collect(),
        accuracy,
        macro_avg: metrics::AverageMetrics {
            precision: accuracy,
            recall: accuracy,
            f1: accuracy,
        },
        weighted_avg: metrics::AverageMetrics {
            precision: accuracy,
            recall: accuracy,
            f1: accuracy,
        },
        total_support: 20,
    };
    mk(0.95).save(&dir.path().join("plain.json")).unwrap();
    mk(0.60).save(&dir.path().join("encrypted.json")).unwrap();

    let output = std::process::Command::new(env!("CARGO_BIN_EXE_ciphertrain"))
        .args([
            "compare",
            "--plain", "plain.json",
            "--encrypted", "encrypted.json",
            "--threshold", "0.05",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

/// Usage errors exit 1 (here: keygen below the minimum prime size).
#[test]
fn keygen_usage_error_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_ciphertrain"))
        .args(["keygen", "--bits", "8"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

/// I/O and data errors exit 2 (here: evaluating weights that do not exist).
#[test]
fn missing_file_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_ciphertrain"))
        .args([
            "evaluate", "--weights", "no_such.ctwt", "--dataset", "no_such_dir",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

/// Numerical divergence exits 3, with advice on stderr.
#[test]
fn divergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("fixture");
    synthetic::generate_dataset(&fixture, 10, 16, 0xD17).unwrap();
    let run = |args: &[&str]| {
        std::process::Command::new(env!("CARGO_BIN_EXE_ciphertrain"))
            .args(args)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    let materialize = run(&[
        "encrypt-dataset", "--root", "fixture", "--out", "plain",
        "--mode", "plain", "--split-seed", "1",
    ]);
    assert_eq!(materialize.status.code(), Some(0));

    let diverge = run(&[
        "train", "--dataset", "plain", "--epochs", "3", "--batch-size", "8",
        "--input-size", "16", "--learning-rate", "1e18", "--optimizer", "sgd",
        "--seed", "1",
    ]);
    assert_eq!(diverge.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&diverge.stderr);
    assert!(stderr.contains("learning rate"), "stderr: {stderr}");
}
