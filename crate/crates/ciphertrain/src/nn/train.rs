//! Training loop, optimizers, prediction, and dataset-to-tensor loading.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use super::{argmax, backward_example, forward_example, Gradients, NetworkParams};
use crate::dataset::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::image_crypto::ImageTensor;
use crate::imageio;
use crate::rng::{derive_seed, SplitMix64};

/// Gradient accumulation chunk size. Fixed so the reduction order, and with
/// it every trained weight, is independent of thread count.
const GRAD_CHUNK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    SgdMomentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Square resize applied to every image at load time.
    pub input_size: usize,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::default(),
            input_size: 64,
            seed: 0,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// First-moment / second-moment buffers aligned with the gradient layout.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(net: &NetworkParams, kind: OptimizerKind) -> Self {
        let zeros: Vec<Vec<f64>> = net
            .layers()
            .iter()
            .map(|l| vec![0.0; l.param_count()])
            .collect();
        OptimizerState {
            kind,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn apply(&mut self, net: &mut NetworkParams, grads: &Gradients, learning_rate: f64) {
        self.step += 1;
        for layer_idx in net.trainable_layer_indices() {
            let g = &grads.per_layer[layer_idx];
            let m = &mut self.m[layer_idx];
            let v = &mut self.v[layer_idx];
            let params = net.layer_params_mut(layer_idx);
            match self.kind {
                OptimizerKind::Sgd => {
                    for (p, &gi) in params.into_iter().zip(g) {
                        *p -= learning_rate * gi;
                    }
                }
                OptimizerKind::SgdMomentum { beta } => {
                    for ((p, &gi), mi) in params.into_iter().zip(g).zip(m) {
                        *mi = beta * *mi + gi;
                        *p -= learning_rate * *mi;
                    }
                }
                OptimizerKind::Adam {
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let bc1 = 1.0 - beta1.powi(self.step as i32);
                    let bc2 = 1.0 - beta2.powi(self.step as i32);
                    for (((p, &gi), mi), vi) in params.into_iter().zip(g).zip(m).zip(v) {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                        let m_hat = *mi / bc1;
                        let v_hat = *vi / bc2;
                        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
    }
}

/// Forward + backward over a sample list. Gradients are summed per fixed-size
/// chunk in example order and chunks are merged in index order, so the result
/// is bitwise identical however rayon schedules the work. Returns summed
/// loss and the number of correct argmax predictions.
fn run_batch(
    net: &NetworkParams,
    samples: &[(&[f64], usize)],
) -> Result<(Gradients, f64, usize)> {
    for &(_, label) in samples {
        if label >= net.num_classes() {
            return Err(Error::ShapeError(format!(
                "label {label} outside {} classes",
                net.num_classes()
            )));
        }
    }
    let partials: Vec<Result<(Gradients, f64, usize)>> = samples
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = Gradients::zeros(net);
            let mut loss = 0.0;
            let mut correct = 0usize;
            for &(x, y) in chunk {
                let trace = forward_example(net, x)?;
                if argmax(trace.probabilities()) == y {
                    correct += 1;
                }
                loss += backward_example(net, &trace, y, &mut grads);
            }
            Ok((grads, loss, correct))
        })
        .collect();

    let mut total = Gradients::zeros(net);
    let mut loss = 0.0;
    let mut correct = 0usize;
    for partial in partials {
        let (g, l, c) = partial?;
        total.add_assign(&g);
        loss += l;
        correct += c;
    }
    Ok((total, loss, correct))
}

fn step(
    net: &mut NetworkParams,
    samples: &[(&[f64], usize)],
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<(f64, usize)> {
    let (mut grads, loss_sum, correct) = run_batch(net, samples)?;
    let batch_len = samples.len() as f64;
    let loss = loss_sum / batch_len;
    if !loss.is_finite() {
        return Err(Error::NumericalDivergence);
    }
    grads.scale(1.0 / batch_len);
    state.apply(net, &grads, config.learning_rate);
    Ok((loss, correct))
}

/// Mean cross-entropy loss and mean analytic gradients for a batch, without
/// touching the network. Gradient vectors align with the layer list (weights
/// then bias per trainable layer, empty for stateless layers).
pub fn loss_and_gradients(
    net: &NetworkParams,
    batch: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, Vec<Vec<f64>>)> {
    if batch.len() != labels.len() || batch.is_empty() {
        return Err(Error::ShapeError("batch and labels must align".into()));
    }
    let samples: Vec<(&[f64], usize)> = batch
        .iter()
        .map(|x| x.as_slice())
        .zip(labels.iter().copied())
        .collect();
    let (mut grads, loss_sum, _) = run_batch(net, &samples)?;
    let scale = 1.0 / batch.len() as f64;
    grads.scale(scale);
    Ok((loss_sum * scale, grads.per_layer))
}

/// One optimizer update from one minibatch; returns the mean cross-entropy
/// loss of the batch before the update.
pub fn train_step(
    net: &mut NetworkParams,
    batch: &[Vec<f64>],
    labels: &[usize],
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<f64> {
    if batch.len() != labels.len() || batch.is_empty() {
        return Err(Error::ShapeError("batch and labels must align".into()));
    }
    let samples: Vec<(&[f64], usize)> = batch
        .iter()
        .map(|x| x.as_slice())
        .zip(labels.iter().copied())
        .collect();
    step(net, &samples, state, config).map(|(loss, _)| loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

/// Outcome of a training run: per-epoch curves plus a snapshot of the
/// weights at the best validation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub per_epoch: Vec<EpochStats>,
    /// Index into `per_epoch` of the highest validation accuracy, first
    /// occurrence on ties.
    pub best_epoch: usize,
    pub best_weights: NetworkParams,
}

/// Serializable view of the curves (the weights travel separately in the
/// binary weights file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainCurves {
    pub version: u32,
    pub per_epoch: Vec<EpochStats>,
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn curves(&self) -> TrainCurves {
        TrainCurves {
            version: 1,
            per_epoch: self.per_epoch.clone(),
            best_epoch: self.best_epoch,
        }
    }

    pub fn save_curves(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.curves()).expect("curves serialize");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

impl std::fmt::Display for TrainCurves {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>5}  {:>10}  {:>9}  {:>7}", "epoch", "train_loss", "train_acc", "val_acc")?;
        for (i, e) in self.per_epoch.iter().enumerate() {
            let marker = if i == self.best_epoch { "  <- best" } else { "" };
            writeln!(
                f,
                "{i:>5}  {:>10.4}  {:>9.4}  {:>7.4}{marker}",
                e.train_loss, e.train_accuracy, e.val_accuracy
            )?;
        }
        Ok(())
    }
}

/// Loads one split of a materialized dataset as planar `[c][h][w]` tensors
/// scaled to `[0, 1]`, with integer class labels.
///
/// Randomized cipher images (`.cimg`) are not directly consumable; for those
/// entries the low-byte view PNG written by `--emit-view` is loaded instead.
pub fn load_split_tensors(
    manifest: &DatasetManifest,
    root: &Path,
    split: Split,
    input_size: usize,
    channels: usize,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let entries: Vec<_> = manifest.entries_for(split).collect();
    let tensors: Vec<Result<Vec<f64>>> = entries
        .par_iter()
        .map(|entry| {
            let rel = if entry.path.ends_with(".cimg") {
                entry.path.replace(".cimg", ".view.png")
            } else {
                entry.path.clone()
            };
            let img = imageio::load_image(&root.join(&rel))?;
            let img = to_channels(&img, channels);
            let img = img.resize_square(input_size);
            Ok(to_planar_normalized(&img))
        })
        .collect();
    let mut inputs = Vec::with_capacity(entries.len());
    for t in tensors {
        inputs.push(t?);
    }
    let labels = entries
        .iter()
        .map(|e| {
            manifest
                .class_index(&e.label)
                .ok_or_else(|| Error::ManifestParse(format!("unknown label {:?}", e.label)))
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok((inputs, labels))
}

/// Channel conversion: 3->1 averages, 1->3 replicates.
fn to_channels(img: &ImageTensor, channels: usize) -> ImageTensor {
    if img.channels == channels {
        return img.clone();
    }
    let pixels = match (img.channels, channels) {
        (3, 1) => img
            .pixels
            .chunks_exact(3)
            .map(|rgb| ((rgb[0] as u16 + rgb[1] as u16 + rgb[2] as u16) / 3) as u8)
            .collect(),
        (1, 3) => img.pixels.iter().flat_map(|&p| [p, p, p]).collect(),
        _ => unreachable!("ImageTensor allows 1 or 3 channels"),
    };
    ImageTensor {
        width: img.width,
        height: img.height,
        channels,
        pixels,
    }
}

/// Interleaved 8-bit rows to planar f64 in `[0, 1]`.
fn to_planar_normalized(img: &ImageTensor) -> Vec<f64> {
    let (w, h, c) = (img.width, img.height, img.channels);
    let mut out = vec![0.0; w * h * c];
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                out[ch * h * w + y * w + x] = img.pixels[(y * w + x) * c + ch] as f64 / 255.0;
            }
        }
    }
    out
}

fn accuracy_over(net: &NetworkParams, xs: &[Vec<f64>], ys: &[usize]) -> Result<f64> {
    let correct: usize = xs
        .par_iter()
        .zip(ys)
        .map(|(x, &y)| {
            forward_example(net, x).map(|t| (argmax(t.probabilities()) == y) as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(correct as f64 / xs.len() as f64)
}

/// Trains on the manifest's train split, validating each epoch; retains the
/// weights of the best validation epoch. A pure function of (dataset bytes,
/// config, initial weights).
pub fn train(
    net: &mut NetworkParams,
    manifest: &DatasetManifest,
    root: &Path,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    let channels = net.input_channels();
    let (train_x, train_y) =
        load_split_tensors(manifest, root, Split::Train, config.input_size, channels)?;
    let (val_x, val_y) =
        load_split_tensors(manifest, root, Split::Val, config.input_size, channels)?;
    if train_x.is_empty() {
        return Err(Error::Config("train split is empty".into()));
    }
    if val_x.is_empty() {
        return Err(Error::Config("val split is empty".into()));
    }

    let mut state = OptimizerState::new(net, config.optimizer);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut per_epoch = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0usize;
    let mut best_accuracy = f64::NEG_INFINITY;
    let mut best_weights = net.clone();

    for epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            let mut rng = SplitMix64::new(derive_seed(config.seed, epoch as u64));
            rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch_indices in order.chunks(config.batch_size) {
            let samples: Vec<(&[f64], usize)> = batch_indices
                .iter()
                .map(|&i| (train_x[i].as_slice(), train_y[i]))
                .collect();
            let (batch_loss, batch_correct) = step(net, &samples, &mut state, config)?;
            loss_sum += batch_loss * samples.len() as f64;
            correct += batch_correct;
        }
        if !net.all_params_finite() {
            return Err(Error::NumericalDivergence);
        }
        let val_accuracy = accuracy_over(net, &val_x, &val_y)?;
        per_epoch.push(EpochStats {
            train_loss: loss_sum / train_x.len() as f64,
            train_accuracy: correct as f64 / train_x.len() as f64,
            val_accuracy,
        });
        if val_accuracy > best_accuracy {
            best_accuracy = val_accuracy;
            best_epoch = epoch;
            best_weights = net.clone();
        }
    }
    Ok(TrainReport {
        per_epoch,
        best_epoch,
        best_weights,
    })
}

/// Predictions over one split: argmax labels, full probability rows, and the
/// true labels from the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictOutput {
    pub predictions: Vec<usize>,
    pub probabilities: Vec<Vec<f64>>,
    pub truth: Vec<usize>,
}

pub fn predict(
    net: &NetworkParams,
    manifest: &DatasetManifest,
    root: &Path,
    split: Split,
    input_size: usize,
) -> Result<PredictOutput> {
    let (xs, truth) = load_split_tensors(manifest, root, split, input_size, net.input_channels())?;
    let probabilities: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| forward_example(net, x).map(|t| t.probabilities().to_vec()))
        .collect::<Result<_>>()?;
    let predictions = probabilities.iter().map(|p| argmax(p)).collect();
    Ok(PredictOutput {
        predictions,
        probabilities,
        truth,
    })
}
