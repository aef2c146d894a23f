//! Confusion matrices, per-class precision/recall/F1 reports, and the
//! plain-vs-encrypted comparison.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rows are true classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Builds the matrix from parallel label sequences. Empty inputs yield an
/// all-zero matrix; out-of-range or length-mismatched labels are rejected.
pub fn confusion(
    true_labels: &[usize],
    predicted_labels: &[usize],
    classes: &[String],
) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::LabelMismatch);
    }
    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        if t >= k || p >= k {
            return Err(Error::LabelMismatch);
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class and aggregate scores for one evaluation. Stored values keep full
/// precision; rounding to 3 decimals happens only in `Display`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: AverageMetrics,
    pub weighted_avg: AverageMetrics,
    pub total_support: u64,
}

/// Computes the report. Precision/recall/F1 fall back to 0 when their
/// denominator is 0; an empty matrix is an error.
pub fn report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let k = cm.classes.len();
    let mut per_class = Vec::with_capacity(k);
    let mut correct = 0u64;
    for class in 0..k {
        let tp = cm.counts[class][class];
        correct += tp;
        let row_sum: u64 = cm.counts[class].iter().sum();
        let col_sum: u64 = (0..k).map(|r| cm.counts[r][class]).sum();
        let precision = ratio_or_zero(tp, col_sum);
        let recall = ratio_or_zero(tp, row_sum);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support: row_sum,
        });
    }
    let macro_avg = AverageMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / k as f64,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / k as f64,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / k as f64,
    };
    let weight = |f: fn(&ClassMetrics) -> f64| -> f64 {
        per_class
            .iter()
            .map(|m| f(m) * m.support as f64)
            .sum::<f64>()
            / total as f64
    };
    let weighted_avg = AverageMetrics {
        precision: weight(|m| m.precision),
        recall: weight(|m| m.recall),
        f1: weight(|m| m.f1),
    };
    Ok(ClassificationReport {
        classes: cm.classes.clone(),
        per_class,
        accuracy: correct as f64 / total as f64,
        macro_avg,
        weighted_avg,
        total_support: total,
    })
}

fn ratio_or_zero(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy gap and per-class F1 deltas between two reports over the same
/// classes, with a pass/fail flag against a gap threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub classes: Vec<String>,
    pub plain_accuracy: f64,
    pub encrypted_accuracy: f64,
    /// plain accuracy minus encrypted accuracy
    pub accuracy_gap: f64,
    /// per class: encrypted F1 minus plain F1
    pub f1_deltas: Vec<f64>,
    pub threshold: f64,
    pub within_threshold: bool,
}

pub fn compare(
    plain: &ClassificationReport,
    encrypted: &ClassificationReport,
    threshold: f64,
) -> Result<ComparisonReport> {
    if plain.classes != encrypted.classes {
        return Err(Error::IncomparableReports);
    }
    let accuracy_gap = plain.accuracy - encrypted.accuracy;
    let f1_deltas = plain
        .per_class
        .iter()
        .zip(&encrypted.per_class)
        .map(|(p, e)| e.f1 - p.f1)
        .collect();
    Ok(ComparisonReport {
        classes: plain.classes.clone(),
        plain_accuracy: plain.accuracy,
        encrypted_accuracy: encrypted.accuracy,
        accuracy_gap,
        f1_deltas,
        threshold,
        within_threshold: accuracy_gap.abs() <= threshold,
    })
}

impl ClassificationReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::ManifestParse(format!("bad report: {e}")))
    }
}

impl ComparisonReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::ManifestParse(format!("bad report: {e}")))
    }
}

// Fixed-width table, three decimals: per-class rows, then accuracy, macro
// avg, weighted avg.
impl fmt::Display for ClassificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_width = self
            .classes
            .iter()
            .map(|c| c.len())
            .chain(["weighted avg".len()])
            .max()
            .unwrap();
        writeln!(
            f,
            "{:>name_width$}  {:>9}  {:>9}  {:>9}  {:>9}",
            "", "precision", "recall", "f1-score", "support"
        )?;
        writeln!(f)?;
        for (class, m) in self.classes.iter().zip(&self.per_class) {
            writeln!(
                f,
                "{class:>name_width$}  {:>9.3}  {:>9.3}  {:>9.3}  {:>9}",
                m.precision, m.recall, m.f1, m.support
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:>name_width$}  {:>9}  {:>9}  {:>9.3}  {:>9}",
            "accuracy", "", "", self.accuracy, self.total_support
        )?;
        writeln!(
            f,
            "{:>name_width$}  {:>9.3}  {:>9.3}  {:>9.3}  {:>9}",
            "macro avg",
            self.macro_avg.precision,
            self.macro_avg.recall,
            self.macro_avg.f1,
            self.total_support
        )?;
        writeln!(
            f,
            "{:>name_width$}  {:>9.3}  {:>9.3}  {:>9.3}  {:>9}",
            "weighted avg",
            self.weighted_avg.precision,
            self.weighted_avg.recall,
            self.weighted_avg.f1,
            self.total_support
        )?;
        Ok(())
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "accuracy: plain {:.3}, encrypted {:.3}, gap {:+.3} (threshold {:.3}) -> {}",
            self.plain_accuracy,
            self.encrypted_accuracy,
            self.accuracy_gap,
            self.threshold,
            if self.within_threshold { "PASS" } else { "FAIL" }
        )?;
        writeln!(f, "per-class f1 delta (encrypted - plain):")?;
        let width = self.classes.iter().map(|c| c.len()).max().unwrap_or(0);
        for (class, delta) in self.classes.iter().zip(&self.f1_deltas) {
            writeln!(f, "  {class:>width$}  {delta:+.3}")?;
        }
        Ok(())
    }
}
