use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::loss::softmax;
use crate::error::{Error, Result};
use crate::rng;

/// Feed-forward classifier: rectifier hidden layers, linear output layer, softmax head.
///
/// Weights of layer `l` are stored row-major with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Activations recorded by [`MlpModel::forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `inputs[l]` is the vector consumed by layer `l` (`inputs[0]` is the sample itself).
    pub inputs: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardTrace {
    /// Penultimate feature: the input of the output layer.
    pub fn penultimate(&self) -> &[f64] {
        self.inputs.last().expect("trace has at least one layer")
    }
}

/// Parameter gradients together with the back-propagated signal of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    /// `signals[l]` is the loss gradient w.r.t. the pre-activation of layer `l`.
    /// The last entry is the logit gradient.
    pub signals: Vec<Vec<f64>>,
}

impl GradientBundle {
    pub fn zeros_like(model: &MlpModel) -> Self {
        GradientBundle {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            signals: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn logit_grad(&self) -> &[f64] {
        self.signals.last().expect("bundle has at least one layer")
    }

    /// `self += scale * other` over parameter gradients. Signals are left untouched.
    pub fn add_scaled(&mut self, other: &GradientBundle, scale: f64) {
        for (dst, src) in self.weights.iter_mut().zip(&other.weights) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
        for (dst, src) in self.biases.iter_mut().zip(&other.biases) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    /// Zeroes everything except the output-layer weight gradient.
    pub fn retain_last_layer_weights(mut self) -> Self {
        let last = self.weights.len() - 1;
        for (l, w) in self.weights.iter_mut().enumerate() {
            if l != last {
                w.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
        self
    }

    /// Gradients flattened in the same order as [`MlpModel::params_flat`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl MlpModel {
    /// Builds a model with weights and biases drawn uniformly from
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = rng::seeded(seed, 0x6d6c70);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-bound..=bound))
                    .collect(),
            );
            biases.push((0..fan_out).map(|_| rng.random_range(-bound..=bound)).collect());
        }
        Ok(MlpModel {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Builds a model from explicit parameters (row-major `(out, in)` weights).
    pub fn from_parameters(
        layer_dims: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_dims(layer_dims)?;
        let layers = layer_dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Dimension {
                expected: layers,
                got: weights.len().min(biases.len()),
            });
        }
        for (l, pair) in layer_dims.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] {
                return Err(Error::Dimension {
                    expected: pair[0] * pair[1],
                    got: weights[l].len(),
                });
            }
            if biases[l].len() != pair[1] {
                return Err(Error::Dimension {
                    expected: pair[1],
                    got: biases[l].len(),
                });
            }
        }
        let model = MlpModel {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        };
        if !model.is_finite() {
            return Err(Error::config("model parameters must be finite"));
        }
        Ok(model)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Parameters flattened layer by layer (weights then bias).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`params_flat`](Self::params_flat).
    pub fn with_params_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension {
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let mut model = self.clone();
        let mut offset = 0;
        for (w, b) in model.weights.iter_mut().zip(model.biases.iter_mut()) {
            let (wl, bl) = (w.len(), b.len());
            w.copy_from_slice(&flat[offset..offset + wl]);
            offset += wl;
            b.copy_from_slice(&flat[offset..offset + bl]);
            offset += bl;
        }
        Ok(model)
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let last = self.num_layers() - 1;
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut current = x.to_vec();
        for l in 0..self.num_layers() {
            let mut pre = self.affine(l, &current);
            inputs.push(current);
            if l == last {
                let probs = softmax(&pre);
                return Ok(ForwardTrace {
                    inputs,
                    logits: pre,
                    probs,
                });
            }
            pre.iter_mut().for_each(|v| *v = v.max(0.0));
            current = pre;
        }
        unreachable!("model has at least one layer")
    }

    /// Class probabilities only.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.probs)
    }

    fn affine(&self, layer: usize, input: &[f64]) -> Vec<f64> {
        let in_dim = self.layer_dims[layer];
        self.weights[layer]
            .chunks_exact(in_dim)
            .zip(&self.biases[layer])
            .map(|(row, b)| b + dot(row, input))
            .collect()
    }

    /// Gradient of `cross_entropy(target, probs)`; the logit gradient is `probs - target`.
    pub fn backward(&self, trace: &ForwardTrace, target: &[f64]) -> GradientBundle {
        let g: Vec<f64> = trace.probs.iter().zip(target).map(|(p, t)| p - t).collect();
        self.backward_from_logits(trace, g)
    }

    /// Back-propagates an arbitrary logit gradient through the network.
    pub fn backward_from_logits(&self, trace: &ForwardTrace, logit_grad: Vec<f64>) -> GradientBundle {
        let layers = self.num_layers();
        let mut weights = vec![Vec::new(); layers];
        let mut biases = vec![Vec::new(); layers];
        let mut signals = vec![Vec::new(); layers];
        let mut delta = logit_grad;
        for l in (0..layers).rev() {
            let input = &trace.inputs[l];
            let in_dim = input.len();
            let mut gw = vec![0.0; delta.len() * in_dim];
            for (row, &d) in gw.chunks_exact_mut(in_dim).zip(&delta) {
                for (w, &z) in row.iter_mut().zip(input) {
                    *w = d * z;
                }
            }
            weights[l] = gw;
            biases[l] = delta.clone();
            if l > 0 {
                // input[l] = relu(pre[l-1]); the rectifier passes gradient where input > 0
                let mut back = vec![0.0; in_dim];
                for (row, &d) in self.weights[l].chunks_exact(in_dim).zip(&delta) {
                    for (acc, &w) in back.iter_mut().zip(row) {
                        *acc += d * w;
                    }
                }
                for (b, &z) in back.iter_mut().zip(input) {
                    if z <= 0.0 {
                        *b = 0.0;
                    }
                }
                signals[l] = std::mem::replace(&mut delta, back);
            } else {
                signals[l] = std::mem::take(&mut delta);
            }
        }
        GradientBundle {
            weights,
            biases,
            signals,
        }
    }

    /// `sum_i weight_i * grad CE(target_i, f(x_i))` over `(x, target, weight)` triples.
    pub fn weighted_ce_gradient<'a, I>(&self, samples: I) -> Result<GradientBundle>
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64], f64)>,
    {
        let mut total = GradientBundle::zeros_like(self);
        for (x, target, weight) in samples {
            if weight == 0.0 {
                continue;
            }
            let trace = self.forward(x)?;
            total.add_scaled(&self.backward(&trace, target), weight);
        }
        Ok(total)
    }

    /// Returns `params - eta * grads`; `self` is left unchanged.
    pub fn sgd_step(&self, grads: &GradientBundle, eta: f64) -> MlpModel {
        let mut next = self.clone();
        next.apply_sgd(grads, eta);
        next
    }

    pub(crate) fn apply_sgd(&mut self, grads: &GradientBundle, eta: f64) {
        if eta == 0.0 {
            return;
        }
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            for (p, d) in w.iter_mut().zip(g) {
                *p -= eta * d;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            for (p, d) in b.iter_mut().zip(g) {
                *p -= eta * d;
            }
        }
    }
}

/// Penultimate feature and logit gradient against `target`.
pub fn extract_last_layer(trace: &ForwardTrace, target: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = trace.probs.iter().zip(target).map(|(p, t)| p - t).collect();
    (trace.penultimate().to_vec(), g)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::config("a model needs at least an input and an output dimension"));
    }
    if layer_dims.contains(&0) {
        return Err(Error::config("layer dimensions must be positive"));
    }
    if *layer_dims.last().unwrap() < 2 {
        return Err(Error::config("the output layer needs at least two classes"));
    }
    Ok(())
}
