//! Fully-connected ReLU network with a softmax output layer.
//!
//! Hidden layers compute `relu(W x + b)`; the last layer computes
//! `softmax(W x + b)`. Weights are stored row-major with one row per output
//! neuron. Everything is `f64`.

mod adam;
mod checkpoint;
mod spectral;
mod train;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

pub use adam::{adam_update, Adam, AdamConfig};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use spectral::{lipschitz_product, spectral_norm, spectral_norm_with, PowerIteration};
pub use train::{train, Control, TrainConfig, TrainOutcome};

/// One affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (a4, a_rest) = a.split_at(a.len() / 4 * 4);
    let (b4, b_rest) = b.split_at(a4.len());
    for (x, y) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = a_rest.iter().zip(b_rest).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| dot(row, x) + b),
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    seed: u64,
}

/// Gradient of the mean loss, shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Activations recorded by [`Mlp::forward_cached`].
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// Input followed by every hidden activation (post-ReLU).
    pub activations: Vec<Vec<f64>>,
    /// Pre-activations of every layer; the last entry holds the logits.
    pub pre_activations: Vec<Vec<f64>>,
    pub probabilities: Vec<f64>,
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// `-ln softmax(z)[k]` evaluated as `logsumexp(z) - z[k]`.
pub(crate) fn cross_entropy_from_logits(z: &[f64], k: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[k]
}

impl Mlp {
    /// He-initialized network: weights i.i.d. `N(0, 2 / fan_in)`, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        net.seed = seed;
        let mut rng = seeded(seed);
        for layer in &mut net.layers {
            let normal = Normal::new(0.0, (2.0 / layer.inputs as f64).sqrt())
                .map_err(|e| Error::Numerical(e.to_string()))?;
            for w in &mut layer.weights {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(net)
    }

    /// All-zero network of the given shape.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::validation(
                "a network needs an input size and at least one layer",
            ));
        }
        if let Some(pos) = sizes.iter().position(|&s| s < 1) {
            return Err(Error::validation(format!("layer {pos} has size 0")));
        }
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Mlp {
            sizes: sizes.to_vec(),
            layers,
            seed: 0,
        })
    }

    pub(crate) fn from_layers(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::validation("a network needs at least one layer"));
        }
        let mut sizes = vec![layers[0].inputs];
        for (i, l) in layers.iter().enumerate() {
            if l.inputs != *sizes.last().unwrap()
                || l.weights.len() != l.inputs * l.outputs
                || l.bias.len() != l.outputs
                || l.outputs == 0
            {
                return Err(Error::validation(format!("layer {} has inconsistent shape", i + 1)));
            }
            sizes.push(l.outputs);
        }
        Ok(Mlp {
            sizes,
            layers,
            seed,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::validation(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite network input".into()));
        }
        Ok(())
    }

    /// Output logits; no input checks.
    fn logits_into(&self, x: &[f64], a: &mut Vec<f64>, b: &mut Vec<f64>) {
        a.clear();
        a.extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(a, b);
            if i < last {
                for v in b.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(a, b);
        }
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        self.logits_into(x, &mut a, &mut b);
        Ok(a)
    }

    /// Class probabilities at `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.logits(x)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Forward pass that records what [`Mlp::backward`] needs.
    pub fn forward_cached(&self, x: &[f64], cache: &mut ForwardCache) -> Result<()> {
        self.check_input(x)?;
        cache.activations.clear();
        cache.pre_activations.clear();
        cache.activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.apply(cache.activations.last().unwrap(), &mut z);
            if i < last {
                cache.activations.push(z.iter().map(|v| v.max(0.0)).collect());
            }
            cache.pre_activations.push(z);
        }
        cache.probabilities = cache.pre_activations.last().unwrap().clone();
        softmax_in_place(&mut cache.probabilities);
        Ok(())
    }

    /// Logits for many row-major points, `n x K` row-major.
    pub fn logits_batch(&self, points: &[f64]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        let d = self.input_dim();
        let k = self.classes();
        if !points.len().is_multiple_of(d) {
            return Err(Error::validation("point buffer is not a multiple of the input size"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite network input".into()));
        }
        let n = points.len() / d;
        let mut out = vec![0.0; n * k];
        out.par_chunks_mut(k * 256)
            .enumerate()
            .for_each(|(block, dst)| {
                let (mut a, mut b) = (Vec::new(), Vec::new());
                for (j, row) in dst.chunks_exact_mut(k).enumerate() {
                    let i = block * 256 + j;
                    self.logits_into(&points[i * d..(i + 1) * d], &mut a, &mut b);
                    row.copy_from_slice(&a);
                }
            });
        Ok(out)
    }

    /// Probabilities for many row-major points, `n x K` row-major.
    pub fn predict_batch(&self, points: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.logits_batch(points)?;
        for row in out.chunks_exact_mut(self.classes()) {
            softmax_in_place(row);
        }
        Ok(out)
    }

    /// Gradient of the mean cross-entropy over the rows `batch` of
    /// `points`/`labels` (labels 1-based). Returns `(mean loss, gradient)`.
    /// ReLU has derivative 0 at 0.
    pub fn backward(
        &self,
        points: &[f64],
        labels: &[u32],
        batch: &[usize],
    ) -> Result<(f64, Gradients)> {
        let d = self.input_dim();
        let k = self.classes();
        if batch.is_empty() {
            return Err(Error::validation("empty batch"));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut cache = ForwardCache::default();
        let mut loss = 0.0;
        let mut delta: Vec<f64> = Vec::new();
        let mut next: Vec<f64> = Vec::new();
        for &i in batch {
            let label = labels[i] as usize;
            if label == 0 || label > k {
                return Err(Error::validation(format!("label {label} outside 1..={k}")));
            }
            self.forward_cached(&points[i * d..(i + 1) * d], &mut cache)?;
            loss += cross_entropy_from_logits(cache.pre_activations.last().unwrap(), label - 1);
            delta.clear();
            delta.extend_from_slice(&cache.probabilities);
            delta[label - 1] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &cache.activations[l];
                let gw = &mut grads.weights[l];
                for (o, &g) in delta.iter().enumerate() {
                    grads.biases[l][o] += g;
                    if g != 0.0 {
                        for (w, &x) in gw[o * layer.inputs..(o + 1) * layer.inputs]
                            .iter_mut()
                            .zip(input)
                        {
                            *w += g * x;
                        }
                    }
                }
                if l > 0 {
                    next.clear();
                    next.resize(layer.inputs, 0.0);
                    for (o, &g) in delta.iter().enumerate() {
                        if g != 0.0 {
                            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                            for (n, w) in next.iter_mut().zip(row) {
                                *n += w * g;
                            }
                        }
                    }
                    for (n, &z) in next.iter_mut().zip(&cache.pre_activations[l - 1]) {
                        if z <= 0.0 {
                            *n = 0.0;
                        }
                    }
                    std::mem::swap(&mut delta, &mut next);
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for g in grads.weights.iter_mut().chain(grads.biases.iter_mut()).flatten() {
            *g *= scale;
        }
        Ok((loss * scale, grads))
    }
}

/// Per-sample cross-entropy losses of a network on a single-label dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub mean: f64,
    pub max: f64,
    pub per_sample: Vec<f64>,
}

/// Cross-entropy `-ln f_k(x)` of every point, with its mean and maximum.
pub fn losses(net: &Mlp, data: &LabeledDataset) -> Result<LossSummary> {
    let labels = data.single_labels()?;
    if data.dim() != net.input_dim() {
        return Err(Error::validation(format!(
            "dataset dimension {} does not match network input {}",
            data.dim(),
            net.input_dim()
        )));
    }
    let k = net.classes();
    if let Some(&bad) = labels.iter().find(|&&l| l as usize > k) {
        return Err(Error::validation(format!(
            "label {bad} exceeds network output size {k}"
        )));
    }
    let z = net.logits_batch(data.points())?;
    let per_sample: Vec<f64> = z
        .chunks_exact(k)
        .zip(&labels)
        .map(|(z, &l)| cross_entropy_from_logits(z, l as usize - 1))
        .collect();
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let max = per_sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LossSummary {
        mean,
        max,
        per_sample,
    })
}
