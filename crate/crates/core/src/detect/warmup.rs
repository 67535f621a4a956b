use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, MlpModel};
use crate::rng;

/// Fraction of the training set held out to decide early stopping.
pub const HOLDOUT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmupConfig {
    pub max_epochs: usize,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub eta: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmupReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_holdout_loss: f64,
}

/// Plain cross-entropy SGD on observed labels with early stopping.
///
/// A seeded 10% split is held out only to monitor the loss; the returned
/// model is the checkpoint with the lowest held-out loss.
pub fn warmup_train(
    model: &MlpModel,
    ds: &Dataset,
    cfg: WarmupConfig,
    seed: u64,
) -> Result<(MlpModel, WarmupReport)> {
    if cfg.max_epochs == 0 {
        return Err(Error::config("warm-up needs at least one epoch"));
    }
    if cfg.batch_size == 0 || !(cfg.eta > 0.0) {
        return Err(Error::config("warm-up needs a positive batch size and learning rate"));
    }
    if ds.len() < 2 {
        return Err(Error::config("warm-up needs at least two samples"));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = rng::seeded(seed, 0x77726d);
    order.shuffle(&mut rng);
    let holdout_len = ((ds.len() as f64 * HOLDOUT_FRACTION).round() as usize).clamp(1, ds.len() - 1);
    let (holdout, train) = order.split_at(holdout_len);
    let mut train = train.to_vec();
    let targets: Vec<Vec<f64>> = (0..ds.len()).map(|i| ds.observed_one_hot(i)).collect();

    let holdout_loss = |m: &MlpModel| -> Result<f64> {
        let mut total = 0.0;
        for &i in holdout {
            total += cross_entropy(&targets[i], &m.predict(ds.x(i))?);
        }
        Ok(total / holdout.len() as f64)
    };

    let mut current = model.clone();
    let mut best = current.clone();
    let mut best_loss = holdout_loss(&current)?;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs_run = 0;
    for epoch in 1..=cfg.max_epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let grads = current.weighted_ce_gradient(
                batch.iter().map(|&i| (ds.x(i), targets[i].as_slice(), scale)),
            )?;
            current.apply_sgd(&grads, cfg.eta);
        }
        epochs_run = epoch;
        let loss = holdout_loss(&current)?;
        if loss < best_loss {
            best_loss = loss;
            best = current.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }
    Ok((
        best,
        WarmupReport {
            epochs_run,
            best_epoch,
            best_holdout_loss: best_loss,
        },
    ))
}

/// Cross-entropy of every sample against its observed label.
pub fn per_sample_losses(model: &MlpModel, ds: &Dataset) -> Result<Vec<f64>> {
    (0..ds.len())
        .map(|i| Ok(cross_entropy(&ds.observed_one_hot(i), &model.predict(ds.x(i))?)))
        .collect()
}
