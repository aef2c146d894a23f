//! Dataset ingestion, deterministic splitting, and materialization of plain
//! or encrypted copies.
//!
//! A dataset is a directory whose immediate subdirectories are classes and
//! whose files are images. `ingest` discovers it in sorted order, `split`
//! assigns every file to train/val/test per class with a seeded shuffle, and
//! `materialize` writes a `<out>/<split>/<class>/<file>` tree in one of three
//! modes. The split lives in a manifest file, so plain and encrypted copies
//! of one manifest are guaranteed to disagree in nothing but pixel values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image_crypto::{
    build_substitution_table, cipher_image_to_view, encrypt_image_deterministic,
    encrypt_image_randomized, SubstitutionTable,
};
use crate::imageio;
use crate::paillier::PublicKey;
use crate::rng::{derive_seed, SplitMix64};

const MANIFEST_VERSION: u32 = 1;

/// Standard manifest file name inside a materialized dataset.
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

/// How a dataset copy is materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncryptionMode {
    Deterministic,
    Randomized,
}

/// Encryption parameters recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncryptionInfo {
    pub mode: EncryptionMode,
    pub key_fingerprint: String,
    pub table_seed: u64,
}

/// One dataset file: path relative to the dataset root, its class, its split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestHeader {
    version: u32,
    seed: u64,
    ratios: [f64; 3],
    classes: Vec<String>,
    encryption: Option<EncryptionInfo>,
}

/// Persisted record of a split: every file, its label and split assignment,
/// plus the seed and ratios that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub encryption: Option<EncryptionInfo>,
}

impl DatasetManifest {
    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Per-class (train, val, test) counts, in class order.
    pub fn split_counts(&self) -> Vec<(String, [usize; 3])> {
        self.classes
            .iter()
            .map(|class| {
                let mut counts = [0usize; 3];
                for e in self.entries.iter().filter(|e| &e.label == class) {
                    match e.split {
                        Split::Train => counts[0] += 1,
                        Split::Val => counts[1] += 1,
                        Split::Test => counts[2] += 1,
                    }
                }
                (class.clone(), counts)
            })
            .collect()
    }

    // Text format: line 1 is a JSON header object, then one JSON record per
    // line. Struct field order is fixed, so output is byte-stable.
    pub fn to_text(&self) -> String {
        let header = ManifestHeader {
            version: MANIFEST_VERSION,
            seed: self.seed,
            ratios: self.ratios,
            classes: self.classes.clone(),
            encryption: self.encryption.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::ManifestParse("empty manifest".into()))?;
        let header: ManifestHeader = serde_json::from_str(header_line)
            .map_err(|e| Error::ManifestParse(format!("bad header: {e}")))?;
        if header.version != MANIFEST_VERSION {
            return Err(Error::ManifestParse(format!(
                "unsupported version {}",
                header.version
            )));
        }
        let mut entries = Vec::new();
        for line in lines {
            let entry: ManifestEntry = serde_json::from_str(line)
                .map_err(|e| Error::ManifestParse(format!("bad record {line:?}: {e}")))?;
            if !header.classes.contains(&entry.label) {
                return Err(Error::ManifestParse(format!(
                    "record label {:?} not in class list",
                    entry.label
                )));
            }
            entries.push(entry);
        }
        Ok(DatasetManifest {
            classes: header.classes,
            entries,
            seed: header.seed,
            ratios: header.ratios,
            encryption: header.encryption,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Classes and their files as discovered on disk, both sorted
/// lexicographically so seeded shuffles have a stable basis.
#[derive(Debug, Clone)]
pub struct IngestedDataset {
    pub classes: Vec<String>,
    /// Per class: file names relative to the class directory.
    pub files: Vec<Vec<String>>,
}

/// Scans a folder-of-class-folders dataset. Every immediate subdirectory is a
/// class; files with unknown extensions are ignored; images that fail to
/// parse abort with the offending path.
pub fn ingest(root: &Path) -> Result<IngestedDataset> {
    let mut class_dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::EmptyClass(root.to_path_buf()));
    }

    let mut classes = Vec::new();
    let mut files = Vec::new();
    for dir in class_dirs {
        let class = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::EmptyClass(dir.clone()))?
            .to_string();
        let mut names: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && imageio::is_image_path(p))
            .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(str::to_string))
            .collect();
        names.sort();
        if names.is_empty() {
            return Err(Error::EmptyClass(dir));
        }
        for name in &names {
            imageio::probe_image(&dir.join(name))?;
        }
        classes.push(class);
        files.push(names);
    }
    Ok(IngestedDataset { classes, files })
}

/// Assigns every file to a split. Per class: shuffle with a class-derived
/// seed, take `floor(r_val * N)` files for val and `floor(r_test * N)` for
/// test, and the remainder for train. Deterministic for a fixed seed.
pub fn split(ingested: &IngestedDataset, ratios: [f64; 3], seed: u64) -> Result<DatasetManifest> {
    if ratios.iter().any(|r| *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadRatios);
    }
    let mut entries = Vec::new();
    for (class_idx, (class, names)) in ingested.classes.iter().zip(&ingested.files).enumerate() {
        if names.is_empty() {
            return Err(Error::EmptyClass(PathBuf::from(class)));
        }
        let mut shuffled = names.clone();
        let mut rng = SplitMix64::new(derive_seed(seed, class_idx as u64));
        rng.shuffle(&mut shuffled);

        let n = shuffled.len();
        let val_count = (ratios[1] * n as f64).floor() as usize;
        let test_count = (ratios[2] * n as f64).floor() as usize;
        let train_count = n - val_count - test_count;

        for (i, name) in shuffled.into_iter().enumerate() {
            let split = if i < train_count {
                Split::Train
            } else if i < train_count + val_count {
                Split::Val
            } else {
                Split::Test
            };
            entries.push(ManifestEntry {
                path: format!("{class}/{name}"),
                label: class.clone(),
                split,
            });
        }
    }
    // Stable output order: by class, then split directory, then file name.
    entries.sort_by(|a, b| {
        (&a.label, a.split.dir_name(), &a.path).cmp(&(&b.label, b.split.dir_name(), &b.path))
    });
    Ok(DatasetManifest {
        classes: ingested.classes.clone(),
        entries,
        seed,
        ratios,
        encryption: None,
    })
}

/// What `materialize` writes.
#[derive(Clone)]
pub enum MaterializeMode<'a> {
    /// Canonical re-encode of the source images, no encryption.
    Plain,
    /// Substitution-table images (valid PNGs, trainable).
    Deterministic(&'a SubstitutionTable),
    /// Per-pixel Paillier ciphertext files; `emit_view` additionally writes
    /// low-byte view PNGs next to them.
    Randomized {
        public_key: &'a PublicKey,
        seed: u64,
        emit_view: bool,
    },
}

/// Writes a `<out>/<split>/<class>/<file>` tree for the manifest plus the
/// manifest file itself (with encryption info filled in). Images are
/// re-encoded as PNG; randomized mode writes `.cimg` cipher-image files.
/// Per-file work runs in parallel; outputs depend only on inputs and seeds.
pub fn materialize(
    manifest: &DatasetManifest,
    mode: MaterializeMode<'_>,
    in_root: &Path,
    out_root: &Path,
) -> Result<DatasetManifest> {
    for split in [Split::Train, Split::Val, Split::Test] {
        for class in &manifest.classes {
            let dir = out_root.join(split.dir_name()).join(class);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }

    let indexed: Vec<(usize, &ManifestEntry)> = manifest.entries.iter().enumerate().collect();
    let out_entries: Vec<(usize, ManifestEntry)> = indexed
        .par_iter()
        .map(|(idx, entry)| -> Result<(usize, ManifestEntry)> {
            let src = in_root.join(&entry.path);
            let img = imageio::load_image(&src)?;
            let stem = Path::new(&entry.path)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image");
            let rel_dir = format!("{}/{}", entry.split.dir_name(), entry.label);

            let out_rel = match &mode {
                MaterializeMode::Plain => {
                    let rel = format!("{rel_dir}/{stem}.png");
                    imageio::save_image(&out_root.join(&rel), &img)?;
                    rel
                }
                MaterializeMode::Deterministic(table) => {
                    let rel = format!("{rel_dir}/{stem}.png");
                    let enc = encrypt_image_deterministic(&img, table);
                    imageio::save_image(&out_root.join(&rel), &enc)?;
                    rel
                }
                MaterializeMode::Randomized {
                    public_key,
                    seed,
                    emit_view,
                } => {
                    // Per-file rng derived from the dataset seed and the
                    // entry index, so scheduling cannot change outputs.
                    let mut rng = SplitMix64::new(derive_seed(*seed, *idx as u64));
                    let ci = encrypt_image_randomized(&img, public_key, &mut rng)?;
                    let rel = format!("{rel_dir}/{stem}.cimg");
                    crate::image_crypto::write_cipher_image(&out_root.join(&rel), &ci)?;
                    if *emit_view {
                        let view_rel = format!("{rel_dir}/{stem}.view.png");
                        imageio::save_image(&out_root.join(view_rel), &cipher_image_to_view(&ci))?;
                    }
                    rel
                }
            };
            Ok((
                *idx,
                ManifestEntry {
                    path: out_rel,
                    label: entry.label.clone(),
                    split: entry.split,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut ordered: BTreeMap<usize, ManifestEntry> = out_entries.into_iter().collect();
    let entries: Vec<ManifestEntry> = (0..manifest.entries.len())
        .map(|i| ordered.remove(&i).expect("every index produced"))
        .collect();

    let encryption = match &mode {
        MaterializeMode::Plain => None,
        MaterializeMode::Deterministic(table) => Some(EncryptionInfo {
            mode: EncryptionMode::Deterministic,
            key_fingerprint: table.key_fingerprint.to_string(),
            table_seed: table.r_derivation_seed,
        }),
        MaterializeMode::Randomized {
            public_key, seed, ..
        } => Some(EncryptionInfo {
            mode: EncryptionMode::Randomized,
            key_fingerprint: public_key.fingerprint().to_string(),
            table_seed: *seed,
        }),
    };
    let out_manifest = DatasetManifest {
        classes: manifest.classes.clone(),
        entries,
        seed: manifest.seed,
        ratios: manifest.ratios,
        encryption,
    };
    out_manifest.save(&out_root.join(MANIFEST_FILE))?;
    Ok(out_manifest)
}

/// Convenience used by the tests and examples: build a substitution table
/// for a key and materialize the deterministic copy in one call.
pub fn materialize_deterministic(
    manifest: &DatasetManifest,
    pk: &PublicKey,
    table_seed: u64,
    in_root: &Path,
    out_root: &Path,
) -> Result<DatasetManifest> {
    let table = build_substitution_table(pk, table_seed)?;
    materialize(manifest, MaterializeMode::Deterministic(&table), in_root, out_root)
}
