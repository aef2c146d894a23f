//! A compact convolutional classifier with exact analytic gradients.
//!
//! Everything is f64 and deterministic: weight init, shuffling and gradient
//! accumulation are all driven by explicit seeds and fixed reduction orders,
//! so a training run is a pure function of the dataset bytes and the config.
//! The default stack is conv3x3x8 / relu / maxpool / conv3x3x16 / relu /
//! maxpool / flatten / dense64 / relu / dense / softmax.

mod train;
mod weights_io;

pub use train::{
    load_split_tensors, loss_and_gradients, predict, train, train_step, EpochStats,
    OptimizerKind, OptimizerState, PredictOutput, TrainConfig, TrainCurves, TrainReport,
};
pub use weights_io::{load_weights, save_weights};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Planar channels-first spatial data.
    Spatial { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Spatial { c, h, w } => c * h * w,
            Shape::Flat(d) => d,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// `[out][in][ky][kx]`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `[out][in]`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d(ConvLayer),
    Dense(DenseLayer),
    Relu,
    MaxPool2x2,
    Flatten,
    Softmax,
}

impl Layer {
    /// Output shape for a given input shape, or a ShapeError if they do not
    /// compose.
    fn output_shape(&self, input: Shape) -> Result<Shape> {
        match (self, input) {
            (Layer::Conv2d(conv), Shape::Spatial { c, h, w }) => {
                if c != conv.in_channels {
                    return Err(Error::ShapeError(format!(
                        "conv expects {} channels, got {c}",
                        conv.in_channels
                    )));
                }
                if h < conv.kernel || w < conv.kernel {
                    return Err(Error::ShapeError(format!(
                        "conv kernel {} does not fit {h}x{w}",
                        conv.kernel
                    )));
                }
                Ok(Shape::Spatial {
                    c: conv.out_channels,
                    h: h - conv.kernel + 1,
                    w: w - conv.kernel + 1,
                })
            }
            (Layer::Dense(dense), Shape::Flat(d)) => {
                if d != dense.in_dim {
                    return Err(Error::ShapeError(format!(
                        "dense expects {} inputs, got {d}",
                        dense.in_dim
                    )));
                }
                Ok(Shape::Flat(dense.out_dim))
            }
            (Layer::Relu, shape) => Ok(shape),
            (Layer::MaxPool2x2, Shape::Spatial { c, h, w }) => {
                if h < 2 || w < 2 {
                    return Err(Error::ShapeError(format!("cannot pool {h}x{w}")));
                }
                Ok(Shape::Spatial {
                    c,
                    h: h / 2,
                    w: w / 2,
                })
            }
            (Layer::Flatten, Shape::Spatial { c, h, w }) => Ok(Shape::Flat(c * h * w)),
            (Layer::Softmax, Shape::Flat(d)) => Ok(Shape::Flat(d)),
            (layer, shape) => Err(Error::ShapeError(format!(
                "layer {layer:?} cannot consume shape {shape:?}"
            ))),
        }
    }

    /// Number of trainable values (weights then bias), 0 for stateless layers.
    pub fn param_count(&self) -> usize {
        match self {
            Layer::Conv2d(c) => c.weights.len() + c.bias.len(),
            Layer::Dense(d) => d.weights.len() + d.bias.len(),
            _ => 0,
        }
    }
}

/// The classifier: an ordered layer list with a fixed input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layers: Vec<Layer>,
    input_size: usize,
    input_channels: usize,
    num_classes: usize,
    /// Activation shape after each layer, precomputed at construction.
    shapes: Vec<Shape>,
}

impl NetworkParams {
    /// Validates that all layer shapes compose, that the terminal layer is
    /// softmax, and that the final width equals `num_classes`.
    pub fn new(
        layers: Vec<Layer>,
        input_size: usize,
        input_channels: usize,
        num_classes: usize,
    ) -> Result<Self> {
        let mut shape = Shape::Spatial {
            c: input_channels,
            h: input_size,
            w: input_size,
        };
        let mut shapes = Vec::with_capacity(layers.len());
        for layer in &layers {
            shape = layer.output_shape(shape)?;
            shapes.push(shape);
        }
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(Error::ShapeError("terminal layer must be softmax".into()));
        }
        if shape != Shape::Flat(num_classes) {
            return Err(Error::ShapeError(format!(
                "network ends in {shape:?}, expected {num_classes} classes"
            )));
        }
        Ok(NetworkParams {
            layers,
            input_size,
            input_channels,
            num_classes,
            shapes,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn total_param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Indices of layers that carry trainable parameters.
    pub fn trainable_layer_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.param_count() > 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Mutable access to one parameter of one layer, addressing weights
    /// first and then bias. Used by the optimizer and by finite-difference
    /// checks.
    pub fn param_mut(&mut self, layer_idx: usize, param_idx: usize) -> &mut f64 {
        match &mut self.layers[layer_idx] {
            Layer::Conv2d(c) => {
                if param_idx < c.weights.len() {
                    &mut c.weights[param_idx]
                } else {
                    &mut c.bias[param_idx - c.weights.len()]
                }
            }
            Layer::Dense(d) => {
                if param_idx < d.weights.len() {
                    &mut d.weights[param_idx]
                } else {
                    &mut d.bias[param_idx - d.weights.len()]
                }
            }
            _ => panic!("layer {layer_idx} has no parameters"),
        }
    }

    /// Mutable iterator over one layer's parameters, weights then bias,
    /// matching the gradient layout.
    pub(crate) fn layer_params_mut(
        &mut self,
        layer_idx: usize,
    ) -> impl Iterator<Item = &mut f64> {
        match &mut self.layers[layer_idx] {
            Layer::Conv2d(c) => c.weights.iter_mut().chain(c.bias.iter_mut()),
            Layer::Dense(d) => d.weights.iter_mut().chain(d.bias.iter_mut()),
            _ => panic!("layer {layer_idx} has no parameters"),
        }
    }

    pub fn all_params_finite(&self) -> bool {
        self.layers.iter().all(|layer| match layer {
            Layer::Conv2d(c) => {
                c.weights.iter().all(|w| w.is_finite()) && c.bias.iter().all(|b| b.is_finite())
            }
            Layer::Dense(d) => {
                d.weights.iter().all(|w| w.is_finite()) && d.bias.iter().all(|b| b.is_finite())
            }
            _ => true,
        })
    }
}

/// Builds the default stack for a square input. He-uniform initialization,
/// deterministic by seed. The second pool is dropped when the feature map is
/// already down to a single cell (inputs below 12 pixels), so the same
/// builder serves the 8x8 nets used by gradient checks.
pub fn build_default_net(
    input_size: usize,
    channels: usize,
    num_classes: usize,
    seed: u64,
) -> Result<NetworkParams> {
    if input_size < 8 {
        return Err(Error::ShapeError(format!(
            "input size {input_size} below minimum 8"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut layers = vec![
        Layer::Conv2d(init_conv(channels, 8, 3, &mut rng)),
        Layer::Relu,
        Layer::MaxPool2x2,
        Layer::Conv2d(init_conv(8, 16, 3, &mut rng)),
        Layer::Relu,
    ];
    // spatial extent after conv/pool/conv
    let after_second_conv = (input_size - 2) / 2 - 2;
    let spatial = if after_second_conv >= 2 {
        layers.push(Layer::MaxPool2x2);
        after_second_conv / 2
    } else {
        after_second_conv
    };
    layers.push(Layer::Flatten);
    let flat = 16 * spatial * spatial;
    layers.push(Layer::Dense(init_dense(flat, 64, &mut rng)));
    layers.push(Layer::Relu);
    layers.push(Layer::Dense(init_dense(64, num_classes, &mut rng)));
    layers.push(Layer::Softmax);
    NetworkParams::new(layers, input_size, channels, num_classes)
}

fn init_conv(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut SplitMix64) -> ConvLayer {
    let fan_in = (in_channels * kernel * kernel) as f64;
    let limit = (6.0 / fan_in).sqrt();
    let weights = (0..out_channels * in_channels * kernel * kernel)
        .map(|_| (rng.next_f64() * 2.0 - 1.0) * limit)
        .collect();
    ConvLayer {
        in_channels,
        out_channels,
        kernel,
        weights,
        bias: vec![0.0; out_channels],
    }
}

fn init_dense(in_dim: usize, out_dim: usize, rng: &mut SplitMix64) -> DenseLayer {
    let limit = (6.0 / in_dim as f64).sqrt();
    let weights = (0..out_dim * in_dim)
        .map(|_| (rng.next_f64() * 2.0 - 1.0) * limit)
        .collect();
    DenseLayer {
        in_dim,
        out_dim,
        weights,
        bias: vec![0.0; out_dim],
    }
}

// --- forward / backward ------------------------------------------------------

/// Activations produced by one example's forward pass: `values[0]` is the
/// input, `values[i + 1]` the output of layer i.
pub(crate) struct ForwardTrace {
    pub values: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn probabilities(&self) -> &[f64] {
        self.values.last().expect("non-empty network")
    }
}

/// Forward pass for one example, input as planar `[c][h][w]` values in
/// `[0, 1]`.
pub(crate) fn forward_example(net: &NetworkParams, input: &[f64]) -> Result<ForwardTrace> {
    let expected = net.input_channels * net.input_size * net.input_size;
    if input.len() != expected {
        return Err(Error::ShapeError(format!(
            "input has {} values, network expects {expected}",
            input.len()
        )));
    }
    let mut values = Vec::with_capacity(net.layers.len() + 1);
    values.push(input.to_vec());
    let mut shape = Shape::Spatial {
        c: net.input_channels,
        h: net.input_size,
        w: net.input_size,
    };
    for (layer, &out_shape) in net.layers.iter().zip(&net.shapes) {
        let out = apply_layer(layer, values.last().unwrap(), shape, out_shape);
        values.push(out);
        shape = out_shape;
    }
    Ok(ForwardTrace { values })
}

fn apply_layer(layer: &Layer, input: &[f64], in_shape: Shape, out_shape: Shape) -> Vec<f64> {
    match (layer, in_shape, out_shape) {
        (Layer::Conv2d(conv), Shape::Spatial { h, w, .. }, Shape::Spatial { h: oh, w: ow, .. }) => {
            conv_forward(conv, input, h, w, oh, ow)
        }
        (Layer::Dense(dense), _, _) => dense_forward(dense, input),
        (Layer::Relu, _, _) => input.iter().map(|&v| v.max(0.0)).collect(),
        (Layer::MaxPool2x2, Shape::Spatial { c, h, w }, Shape::Spatial { h: oh, w: ow, .. }) => {
            pool_forward(input, c, h, w, oh, ow)
        }
        (Layer::Flatten, _, _) => input.to_vec(),
        (Layer::Softmax, _, _) => softmax(input),
        _ => unreachable!("shapes validated at construction"),
    }
}

fn conv_forward(conv: &ConvLayer, input: &[f64], h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
    let k = conv.kernel;
    let mut out = vec![0.0; conv.out_channels * oh * ow];
    for oc in 0..conv.out_channels {
        let out_base = oc * oh * ow;
        for ic in 0..conv.in_channels {
            let in_base = ic * h * w;
            let w_base = (oc * conv.in_channels + ic) * k * k;
            for oy in 0..oh {
                for ky in 0..k {
                    let row = &input[in_base + (oy + ky) * w..in_base + (oy + ky) * w + w];
                    let wrow = &conv.weights[w_base + ky * k..w_base + ky * k + k];
                    let dst = &mut out[out_base + oy * ow..out_base + (oy + 1) * ow];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (kx, &wv) in wrow.iter().enumerate() {
                            acc += row[ox + kx] * wv;
                        }
                        *d += acc;
                    }
                }
            }
        }
        let bias = conv.bias[oc];
        for v in &mut out[out_base..out_base + oh * ow] {
            *v += bias;
        }
    }
    out
}

fn dense_forward(dense: &DenseLayer, input: &[f64]) -> Vec<f64> {
    (0..dense.out_dim)
        .map(|o| {
            let row = &dense.weights[o * dense.in_dim..(o + 1) * dense.in_dim];
            dense.bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

fn pool_forward(input: &[f64], c: usize, h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        let in_base = ch * h * w;
        let out_base = ch * oh * ow;
        for oy in 0..oh {
            for ox in 0..ow {
                let i = in_base + 2 * oy * w + 2 * ox;
                let m = input[i].max(input[i + 1]).max(input[i + w]).max(input[i + w + 1]);
                out[out_base + oy * ow + ox] = m;
            }
        }
    }
    out
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Per-layer parameter gradients, aligned with the layer list; stateless
/// layers carry an empty vec. Layout matches `param_mut` (weights, then bias).
pub(crate) struct Gradients {
    pub per_layer: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(net: &NetworkParams) -> Self {
        Gradients {
            per_layer: net.layers.iter().map(|l| vec![0.0; l.param_count()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.per_layer.iter_mut().zip(&other.per_layer) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.per_layer {
            for v in layer {
                *v *= factor;
            }
        }
    }
}

/// Backward pass for one example. `trace` must come from `forward_example`
/// on the same network; the label picks the cross-entropy target. Gradients
/// are accumulated into `grads`; the returned value is the example's loss.
pub(crate) fn backward_example(
    net: &NetworkParams,
    trace: &ForwardTrace,
    label: usize,
    grads: &mut Gradients,
) -> f64 {
    let probs = trace.probabilities();
    // -ln(0) = inf and NaN both propagate so train_step can flag divergence
    let loss = -probs[label].ln();

    // fused softmax + cross-entropy: gradient at the softmax input
    let mut delta: Vec<f64> = probs.to_vec();
    delta[label] -= 1.0;

    // walk layers in reverse, skipping the terminal softmax
    let mut in_shape_iter: Vec<Shape> = Vec::with_capacity(net.layers.len());
    let mut shape = Shape::Spatial {
        c: net.input_channels,
        h: net.input_size,
        w: net.input_size,
    };
    for s in &net.shapes {
        in_shape_iter.push(shape);
        shape = *s;
    }

    for idx in (0..net.layers.len() - 1).rev() {
        let layer = &net.layers[idx];
        let input = &trace.values[idx];
        let in_shape = in_shape_iter[idx];
        let out_shape = net.shapes[idx];
        delta = match (layer, in_shape, out_shape) {
            (Layer::Conv2d(conv), Shape::Spatial { h, w, .. }, Shape::Spatial { h: oh, w: ow, .. }) => {
                conv_backward(conv, input, &delta, h, w, oh, ow, &mut grads.per_layer[idx])
            }
            (Layer::Dense(dense), _, _) => {
                dense_backward(dense, input, &delta, &mut grads.per_layer[idx])
            }
            (Layer::Relu, _, _) => delta
                .iter()
                .zip(input)
                .map(|(&d, &x)| if x > 0.0 { d } else { 0.0 })
                .collect(),
            (Layer::MaxPool2x2, Shape::Spatial { c, h, w }, Shape::Spatial { h: oh, w: ow, .. }) => {
                pool_backward(input, &delta, c, h, w, oh, ow)
            }
            (Layer::Flatten, _, _) => delta,
            _ => unreachable!("shapes validated at construction"),
        };
    }
    loss
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    conv: &ConvLayer,
    input: &[f64],
    delta: &[f64],
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    grad: &mut [f64],
) -> Vec<f64> {
    let k = conv.kernel;
    let weight_len = conv.weights.len();
    let mut d_input = vec![0.0; conv.in_channels * h * w];
    for oc in 0..conv.out_channels {
        let out_base = oc * oh * ow;
        // bias gradient
        let mut bias_acc = 0.0;
        for &d in &delta[out_base..out_base + oh * ow] {
            bias_acc += d;
        }
        grad[weight_len + oc] += bias_acc;

        for ic in 0..conv.in_channels {
            let in_base = ic * h * w;
            let w_base = (oc * conv.in_channels + ic) * k * k;
            for oy in 0..oh {
                let d_row = &delta[out_base + oy * ow..out_base + (oy + 1) * ow];
                for ky in 0..k {
                    let in_row = &input[in_base + (oy + ky) * w..in_base + (oy + ky) * w + w];
                    let d_in_row =
                        &mut d_input[in_base + (oy + ky) * w..in_base + (oy + ky) * w + w];
                    for kx in 0..k {
                        let wv = conv.weights[w_base + ky * k + kx];
                        let mut w_acc = 0.0;
                        for (ox, &d) in d_row.iter().enumerate() {
                            w_acc += in_row[ox + kx] * d;
                            d_in_row[ox + kx] += wv * d;
                        }
                        grad[w_base + ky * k + kx] += w_acc;
                    }
                }
            }
        }
    }
    d_input
}

fn dense_backward(
    dense: &DenseLayer,
    input: &[f64],
    delta: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let weight_len = dense.weights.len();
    let mut d_input = vec![0.0; dense.in_dim];
    for (o, &d) in delta.iter().enumerate() {
        let w_row = &dense.weights[o * dense.in_dim..(o + 1) * dense.in_dim];
        let g_row = &mut grad[o * dense.in_dim..(o + 1) * dense.in_dim];
        for i in 0..dense.in_dim {
            g_row[i] += input[i] * d;
            d_input[i] += w_row[i] * d;
        }
        grad[weight_len + o] += d;
    }
    d_input
}

fn pool_backward(
    input: &[f64],
    delta: &[f64],
    c: usize,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
) -> Vec<f64> {
    let mut d_input = vec![0.0; c * h * w];
    for ch in 0..c {
        let in_base = ch * h * w;
        let out_base = ch * oh * ow;
        for oy in 0..oh {
            for ox in 0..ow {
                let i = in_base + 2 * oy * w + 2 * ox;
                // first index attaining the max, matching forward's max scan
                let candidates = [i, i + 1, i + w, i + w + 1];
                let mut best = candidates[0];
                for &cand in &candidates[1..] {
                    if input[cand] > input[best] {
                        best = cand;
                    }
                }
                d_input[best] += delta[out_base + oy * ow + ox];
            }
        }
    }
    d_input
}

/// Batch forward: rows of class probabilities, one per input.
pub fn forward(net: &NetworkParams, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    inputs
        .iter()
        .map(|x| forward_example(net, x).map(|t| t.probabilities().to_vec()))
        .collect()
}

/// Argmax with ties broken toward the lower class index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_input(net: &NetworkParams, seed: u64) -> Vec<f64> {
        let mut rng = SplitMix64::new(seed);
        (0..net.input_channels() * net.input_size() * net.input_size())
            .map(|_| rng.next_f64())
            .collect()
    }

    #[test]
    fn default_net_shapes_and_probabilities() {
        let net = build_default_net(64, 1, 4, 3).unwrap();
        let probs = forward(&net, &[random_input(&net, 1)]).unwrap();
        assert_eq!(probs.len(), 1);
        assert_eq!(probs[0].len(), 4);
        let sum: f64 = probs[0].iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(probs[0].iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn default_net_is_seed_deterministic() {
        let a = build_default_net(32, 1, 3, 9).unwrap();
        let b = build_default_net(32, 1, 3, 9).unwrap();
        assert_eq!(a, b);
        let c = build_default_net(32, 1, 3, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tiny_input_skips_second_pool() {
        let net = build_default_net(8, 1, 2, 1).unwrap();
        let pools = net
            .layers()
            .iter()
            .filter(|l| matches!(l, Layer::MaxPool2x2))
            .count();
        assert_eq!(pools, 1);
        let probs = forward(&net, &[random_input(&net, 2)]).unwrap();
        assert!((probs[0].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_is_per_example_pure() {
        let net = build_default_net(16, 1, 2, 5).unwrap();
        let x = random_input(&net, 7);
        let single = forward(&net, std::slice::from_ref(&x)).unwrap();
        let doubled = forward(&net, &[x.clone(), x]).unwrap();
        assert_eq!(single[0], doubled[0]);
        assert_eq!(doubled[0], doubled[1]);
    }

    #[test]
    fn zero_input_is_a_valid_distribution() {
        let net = build_default_net(16, 1, 3, 8).unwrap();
        let zeros = vec![0.0; 16 * 16];
        let probs = forward(&net, &[zeros]).unwrap();
        assert!((probs[0].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let net = build_default_net(16, 1, 2, 5).unwrap();
        assert!(matches!(
            forward(&net, &[vec![0.0; 10]]),
            Err(Error::ShapeError(_))
        ));
        // network without terminal softmax
        let bad = NetworkParams::new(
            vec![Layer::Flatten, Layer::Dense(init_dense(4, 2, &mut SplitMix64::new(1)))],
            2,
            1,
            2,
        );
        assert!(matches!(bad, Err(Error::ShapeError(_))));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
    }

    /// Central finite differences over every parameter of a small net.
    fn finite_difference_check(seed: u64, input_size: usize, channels: usize, classes: usize) {
        let mut net = build_default_net(input_size, channels, classes, seed).unwrap();
        let mut rng = SplitMix64::new(seed ^ 0xABCD);
        let batch: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                (0..channels * input_size * input_size)
                    .map(|_| rng.next_f64())
                    .collect()
            })
            .collect();
        let labels: Vec<usize> = (0..3).map(|_| rng.next_below(classes as u64) as usize).collect();

        let loss_of = |net: &NetworkParams| -> f64 {
            let mut total = 0.0;
            for (x, &y) in batch.iter().zip(&labels) {
                let trace = forward_example(net, x).unwrap();
                total += -trace.probabilities()[y].ln();
            }
            total / batch.len() as f64
        };

        // analytic
        let mut grads = Gradients::zeros(&net);
        for (x, &y) in batch.iter().zip(&labels) {
            let trace = forward_example(&net, x).unwrap();
            backward_example(&net, &trace, y, &mut grads);
        }
        grads.scale(1.0 / batch.len() as f64);

        let h = 1e-5;
        for layer_idx in net.trainable_layer_indices() {
            let count = net.layers()[layer_idx].param_count();
            for param_idx in 0..count {
                let original = *net.param_mut(layer_idx, param_idx);
                *net.param_mut(layer_idx, param_idx) = original + h;
                let plus = loss_of(&net);
                *net.param_mut(layer_idx, param_idx) = original - h;
                let minus = loss_of(&net);
                *net.param_mut(layer_idx, param_idx) = original;

                let numeric = (plus - minus) / (2.0 * h);
                let analytic = grads.per_layer[layer_idx][param_idx];
                // absolute escape hatch: where both are numerically zero
                // (dead relu paths), the FD quotient is cancellation noise
                let abs_err = (analytic - numeric).abs();
                let rel = abs_err / analytic.abs().max(numeric.abs()).max(1e-12);
                assert!(
                    rel < 1e-4 || abs_err < 1e-9,
                    "layer {layer_idx} param {param_idx}: analytic {analytic}, numeric {numeric}, rel {rel}"
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        finite_difference_check(1, 8, 1, 2);
    }

    #[test]
    fn gradients_match_finite_differences_multichannel() {
        finite_difference_check(2, 12, 3, 3);
    }
}
