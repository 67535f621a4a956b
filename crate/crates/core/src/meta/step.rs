use rand::Rng as _;

use super::gates::{
    lambda_gradient, lambda_update, omega_normalize, omega_update, pseudo_label, residual_features, resolve_label,
    validation_loss, virtual_step, MetaBatch,
};
use crate::data::{augment_with, mixup, Dataset};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, kl_divergence, kl_grad_wrt_p_logits, kl_grad_wrt_q_logits, GradientBundle, LrSchedule, MlpModel};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaConfig {
    /// Meta step size for the weights. Cancels under normalisation.
    pub eta_omega: f64,
    /// Fixed gate of the pseudo-label in the weighted term.
    pub lambda0: f64,
    pub p_mix: f64,
    pub k_kl: f64,
    pub mixup_alpha: f64,
    pub augment_strength: f64,
    /// Open the gate where the derivative is negative instead of positive.
    pub flip_lambda_sign: bool,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            eta_omega: 1.0,
            lambda0: 0.9,
            p_mix: 5.0,
            k_kl: 20.0,
            mixup_alpha: 1.0,
            augment_strength: 0.1,
            flip_lambda_sign: false,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_omega > 0.0 && self.eta_omega.is_finite()) {
            return Err(Error::config("eta_omega must be positive"));
        }
        if !(0.0..=1.0).contains(&self.lambda0) {
            return Err(Error::config("lambda0 must lie in [0, 1]"));
        }
        if !(self.p_mix >= 0.0 && self.p_mix.is_finite()) || !(self.k_kl >= 0.0 && self.k_kl.is_finite()) {
            return Err(Error::config("loss coefficients must be non-negative"));
        }
        if !(self.mixup_alpha > 0.0 && self.mixup_alpha.is_finite()) {
            return Err(Error::config("mixup alpha must be positive"));
        }
        if !(self.augment_strength > 0.0 && self.augment_strength.is_finite()) {
            return Err(Error::config("augmentation strength must be positive"));
        }
        Ok(())
    }
}

/// Random inputs of the regularising terms for one batch sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSample {
    /// Perturbed copy of the sample for the consistency term.
    pub augmented: Vec<f64>,
    pub mix_x: Vec<f64>,
    pub mix_y: Vec<f64>,
}

/// Draws, per batch sample in order, a uniform validation partner, a mixup
/// coefficient and an augmented copy.
pub fn draw_auxiliary(ds: &Dataset, batch: &MetaBatch, cfg: &MetaConfig, rng: &mut Rng) -> Result<Vec<AuxSample>> {
    let val = batch.val_set();
    batch
        .train_indices()
        .iter()
        .map(|&i| {
            let j = val[rng.random_range(0..val.len())];
            let (yi, yj) = (ds.observed_one_hot(i), ds.observed_one_hot(j));
            let (mix_x, mix_y, _) = mixup((ds.x(i), &yi), (ds.x(j), &yj), cfg.mixup_alpha, rng)?;
            let augmented = augment_with(rng, ds.x(i), cfg.augment_strength)?;
            Ok(AuxSample {
                augmented,
                mix_x,
                mix_y,
            })
        })
        .collect()
}

/// Batch means of the four loss terms, coefficients included.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub weighted: f64,
    pub resolved: f64,
    pub mixup: f64,
    pub consistency: f64,
    pub total: f64,
}

/// Batch mean of
/// `omega_i CE(yhat_i(lambda0), p_i) + CE(y*_i, p_i) / B + p_mix CE(y_mix, f(x_mix)) + k KL(p_i, f(x_aug))`
/// and its parameter gradient.
///
/// Label targets are constants; the consistency term is differentiated
/// through both of its arguments.
pub fn training_loss(
    model: &MlpModel,
    ds: &Dataset,
    batch: &MetaBatch,
    omega_star: &[f64],
    lambda_star: &[f64],
    aux: &[AuxSample],
    cfg: &MetaConfig,
) -> Result<(LossTerms, GradientBundle)> {
    let b = batch.batch_size();
    for len in [omega_star.len(), lambda_star.len(), aux.len()] {
        if len != b {
            return Err(Error::Dimension { expected: b, got: len });
        }
    }
    let inv_b = 1.0 / b as f64;
    let mut terms = LossTerms::default();
    let mut grads = GradientBundle::zeros_like(model);
    for (k, &i) in batch.train_indices().iter().enumerate() {
        let y = ds.observed_one_hot(i);
        let trace = model.forward(ds.x(i))?;
        let p = &trace.probs;
        let yhat = pseudo_label(&y, p, cfg.lambda0);
        let ystar = resolve_label(&y, p, lambda_star[k]);
        terms.weighted += omega_star[k] * cross_entropy(&yhat, p);
        terms.resolved += inv_b * cross_entropy(&ystar, p);
        let mut gp: Vec<f64> = (0..p.len())
            .map(|c| omega_star[k] * (p[c] - yhat[c]) + inv_b * (p[c] - ystar[c]))
            .collect();

        if cfg.k_kl > 0.0 {
            let aug = model.forward(&aux[k].augmented)?;
            terms.consistency += cfg.k_kl * kl_divergence(p, &aug.probs);
            for (g, d) in gp.iter_mut().zip(kl_grad_wrt_p_logits(p, &aug.probs)) {
                *g += cfg.k_kl * d;
            }
            let gq: Vec<f64> = kl_grad_wrt_q_logits(p, &aug.probs).iter().map(|d| cfg.k_kl * d).collect();
            grads.add_scaled(&model.backward_from_logits(&aug, gq), inv_b);
        }
        if cfg.p_mix > 0.0 {
            let mix = model.forward(&aux[k].mix_x)?;
            terms.mixup += cfg.p_mix * cross_entropy(&aux[k].mix_y, &mix.probs);
            grads.add_scaled(&model.backward(&mix, &aux[k].mix_y), cfg.p_mix * inv_b);
        }
        grads.add_scaled(&model.backward_from_logits(&trace, gp), inv_b);
    }
    terms.weighted *= inv_b;
    terms.resolved *= inv_b;
    terms.mixup *= inv_b;
    terms.consistency *= inv_b;
    terms.total = terms.weighted + terms.resolved + terms.mixup + terms.consistency;
    Ok((terms, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaStepReport {
    /// Normalised meta weights, batch order.
    pub omega: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub train_loss: f64,
    /// Validation loss before the step.
    pub val_loss: f64,
    /// Validation loss after the probing virtual step.
    pub virtual_val_loss: f64,
    pub lr: f64,
}

/// Probe, weight update, gate update, then one real SGD step at `lr_at(t)`.
pub fn meta_train_step(
    model: &MlpModel,
    ds: &Dataset,
    batch: &MetaBatch,
    schedule: &LrSchedule,
    t: usize,
    cfg: &MetaConfig,
    rng: &mut Rng,
) -> Result<(MlpModel, MetaStepReport)> {
    let eta = schedule.lr_at(t);
    let b = batch.batch_size();
    let val_loss = validation_loss(model, ds, batch.val_set())?;

    let probe = virtual_step(model, ds, batch, &vec![1.0; b], &vec![cfg.lambda0; b], eta)?;
    let virtual_val_loss = validation_loss(&probe, ds, batch.val_set())?;

    let train_feats = residual_features(model, ds, batch.train_indices(), cfg.lambda0)?;
    let val_feats = residual_features(model, ds, batch.val_set(), 1.0)?;
    let omega = omega_normalize(&omega_update(&train_feats, &val_feats, cfg.eta_omega)?);

    let residuals = residual_features(model, ds, batch.train_indices(), 1.0)?;
    let probe_feats = residual_features(&probe, ds, batch.val_set(), 1.0)?;
    let d = lambda_gradient(&residuals, &omega, &probe_feats, eta)?;
    let lambda_star = lambda_update(&d, cfg.flip_lambda_sign);

    let aux = draw_auxiliary(ds, batch, cfg, rng)?;
    let (terms, grads) = training_loss(model, ds, batch, &omega, &lambda_star, &aux, cfg)?;
    let next = model.sgd_step(&grads, eta);
    Ok((
        next,
        MetaStepReport {
            omega,
            lambda_star,
            train_loss: terms.total,
            val_loss,
            virtual_val_loss,
            lr: eta,
        },
    ))
}
