use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, GradientBundle, MlpModel};
use crate::select::{iota, UtilityFeatures};

/// One meta step's view of the data: a training batch and the validation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaBatch {
    train_indices: Vec<usize>,
    val_set: Vec<usize>,
}

impl MetaBatch {
    pub fn new(train_indices: Vec<usize>, val_set: Vec<usize>) -> Result<Self> {
        if train_indices.is_empty() {
            return Err(Error::config("training batch is empty"));
        }
        if val_set.is_empty() {
            return Err(Error::config("validation set is empty"));
        }
        if let Some(i) = train_indices.iter().find(|i| val_set.contains(i)) {
            return Err(Error::config(format!("sample {i} is in both the batch and the validation set")));
        }
        Ok(MetaBatch { train_indices, val_set })
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_indices
    }

    pub fn val_set(&self) -> &[usize] {
        &self.val_set
    }

    pub fn batch_size(&self) -> usize {
        self.train_indices.len()
    }
}

/// `lam * y + (1 - lam) * p`.
pub fn pseudo_label(y: &[f64], p: &[f64], lam: f64) -> Vec<f64> {
    y.iter().zip(p).map(|(yk, pk)| lam * yk + (1.0 - lam) * pk).collect()
}

/// The observed label when the gate is open, the prediction otherwise.
pub fn resolve_label(y: &[f64], p: &[f64], lam_star: f64) -> Vec<f64> {
    if lam_star > 0.0 {
        y.to_vec()
    } else {
        p.to_vec()
    }
}

/// Scales to unit sum; an all-zero vector stays all-zero.
pub fn omega_normalize(omega: &[f64]) -> Vec<f64> {
    let total: f64 = omega.iter().sum();
    if total > 0.0 {
        omega.iter().map(|w| w / total).collect()
    } else {
        vec![0.0; omega.len()]
    }
}

/// `(eta_omega / |V|) * sum_j iota(i, j)` for every training sample `i`.
///
/// `train[i].g` must be the logit gradient against the training target and
/// `val[j].g` the logit gradient against the validation label.
pub fn omega_raw(train: &[UtilityFeatures], val: &[UtilityFeatures], eta_omega: f64) -> Result<Vec<f64>> {
    if val.is_empty() {
        return Err(Error::config("validation set is empty"));
    }
    let scale = eta_omega / val.len() as f64;
    Ok(train
        .iter()
        .map(|fi| scale * val.iter().map(|fj| iota(fi, fj)).sum::<f64>())
        .collect())
}

/// Clipped meta weights `max(0, raw)`.
pub fn omega_update(train: &[UtilityFeatures], val: &[UtilityFeatures], eta_omega: f64) -> Result<Vec<f64>> {
    Ok(omega_raw(train, val, eta_omega)?.into_iter().map(|r| r.max(0.0)).collect())
}

/// Derivative of the validation loss after the virtual step with respect to each gate.
///
/// `train[i].g` is the residual `p_i - y_i`; `val` holds features and
/// gradients of the validation samples under the virtual-step model.
pub fn lambda_gradient(
    train: &[UtilityFeatures],
    omega: &[f64],
    val: &[UtilityFeatures],
    eta_theta: f64,
) -> Result<Vec<f64>> {
    if val.is_empty() {
        return Err(Error::config("validation set is empty"));
    }
    if omega.len() != train.len() {
        return Err(Error::Dimension {
            expected: train.len(),
            got: omega.len(),
        });
    }
    let b = train.len() as f64;
    let v = val.len() as f64;
    Ok(train
        .iter()
        .zip(omega)
        .map(|(fi, &w)| {
            let s: f64 = val.iter().map(|fj| iota(fi, fj)).sum();
            -(eta_theta * w / (b * v)) * s
        })
        .collect())
}

/// Gates from derivatives: 1 where `d > 0`, 0 otherwise. `flip` negates `d` first.
pub fn lambda_update(d: &[f64], flip: bool) -> Vec<f64> {
    d.iter()
        .map(|&di| {
            let di = if flip { -di } else { di };
            if di > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Gradient of `(1/B) sum_i omega_i * CE(pseudo_label(y_i, p_i, lambda_i), f(x_i))`
/// with the pseudo-label held fixed.
fn virtual_gradient(
    model: &MlpModel,
    ds: &Dataset,
    batch: &MetaBatch,
    omega: &[f64],
    lambdas: &[f64],
) -> Result<GradientBundle> {
    let b = batch.batch_size();
    for len in [omega.len(), lambdas.len()] {
        if len != b {
            return Err(Error::Dimension { expected: b, got: len });
        }
    }
    let mut total = GradientBundle::zeros_like(model);
    for (k, &i) in batch.train_indices().iter().enumerate() {
        if omega[k] == 0.0 {
            continue;
        }
        let trace = model.forward(ds.x(i))?;
        let target = pseudo_label(&ds.observed_one_hot(i), &trace.probs, lambdas[k]);
        total.add_scaled(&model.backward(&trace, &target), omega[k] / b as f64);
    }
    Ok(total)
}

/// One SGD step on the weighted pseudo-label loss of the batch; `model` is untouched.
pub fn virtual_step(
    model: &MlpModel,
    ds: &Dataset,
    batch: &MetaBatch,
    omega: &[f64],
    lambdas: &[f64],
    eta_theta: f64,
) -> Result<MlpModel> {
    let grads = virtual_gradient(model, ds, batch, omega, lambdas)?;
    Ok(model.sgd_step(&grads, eta_theta))
}

/// [`virtual_step`] restricted to the output-layer weights.
///
/// This is the step under which the last-layer meta-gradients are exact.
pub fn virtual_step_last_layer(
    model: &MlpModel,
    ds: &Dataset,
    batch: &MetaBatch,
    omega: &[f64],
    lambdas: &[f64],
    eta_theta: f64,
) -> Result<MlpModel> {
    let grads = virtual_gradient(model, ds, batch, omega, lambdas)?.retain_last_layer_weights();
    Ok(model.sgd_step(&grads, eta_theta))
}

/// Mean cross-entropy of `model` on `indices` against the observed labels.
pub fn validation_loss(model: &MlpModel, ds: &Dataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::config("validation set is empty"));
    }
    let mut total = 0.0;
    for &j in indices {
        total += cross_entropy(&ds.observed_one_hot(j), &model.predict(ds.x(j))?);
    }
    Ok(total / indices.len() as f64)
}

/// Last-layer features of `indices` with logit gradient `scale * (p - y)`.
pub(crate) fn residual_features(
    model: &MlpModel,
    ds: &Dataset,
    indices: &[usize],
    scale: f64,
) -> Result<Vec<UtilityFeatures>> {
    indices
        .iter()
        .map(|&i| {
            let trace = model.forward(ds.x(i))?;
            let y = ds.observed(i);
            let g = trace
                .probs
                .iter()
                .enumerate()
                .map(|(k, &p)| scale * (p - if k == y { 1.0 } else { 0.0 }))
                .collect();
            Ok(UtilityFeatures {
                z: trace.penultimate().to_vec(),
                g,
                class: y,
            })
        })
        .collect()
}
