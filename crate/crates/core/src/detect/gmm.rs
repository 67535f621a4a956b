//! Two-component 1-D Gaussian mixture fitted by EM on per-sample losses.

const MAX_ITERS: usize = 100;
const LOG_LIK_TOL: f64 = 1e-6;
/// Added to each component variance after every M-step.
const VAR_FLOOR: f64 = 1e-6;
/// Component means closer than this trigger the median fallback.
const MIN_MEAN_GAP: f64 = 1e-3;
const POSTERIOR_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMixture {
    /// Component 0 always has the lower mean.
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub weights: [f64; 2],
    pub iterations: usize,
    pub log_likelihood: f64,
}

impl GaussianMixture {
    /// Posterior probability of the low-mean component.
    pub fn low_posterior(&self, x: f64) -> f64 {
        let l0 = self.weights[0].ln() + log_normal(x, self.means[0], self.variances[0]);
        let l1 = self.weights[1].ln() + log_normal(x, self.means[1], self.variances[1]);
        let m = l0.max(l1);
        let e0 = (l0 - m).exp();
        e0 / (e0 + (l1 - m).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub clean_idx: Vec<usize>,
    pub noisy_idx: Vec<usize>,
    /// Posterior of the low-loss component per sample (0/1 under the fallback).
    pub clean_posteriors: Vec<f64>,
    pub mixture: Option<GaussianMixture>,
    pub used_fallback: bool,
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean) * (x - mean) / var)
}

/// EM from an initialisation at the extremes of the data with the pooled variance.
pub fn fit_two_gaussians(xs: &[f64]) -> GaussianMixture {
    let n = xs.len() as f64;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n + VAR_FLOOR;
    let mut gm = GaussianMixture {
        means: [lo, hi],
        variances: [var, var],
        weights: [0.5, 0.5],
        iterations: 0,
        log_likelihood: f64::NEG_INFINITY,
    };
    let mut resp = vec![0.0; xs.len()];
    for iter in 1..=MAX_ITERS {
        // E-step
        let mut log_lik = 0.0;
        for (r, &x) in resp.iter_mut().zip(xs) {
            let l0 = gm.weights[0].ln() + log_normal(x, gm.means[0], gm.variances[0]);
            let l1 = gm.weights[1].ln() + log_normal(x, gm.means[1], gm.variances[1]);
            let m = l0.max(l1);
            let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
            log_lik += m + (e0 + e1).ln();
            *r = e0 / (e0 + e1);
        }
        // M-step
        let n0: f64 = resp.iter().sum();
        let n1 = n - n0;
        let tiny = 10.0 * f64::EPSILON;
        let (n0s, n1s) = (n0.max(tiny), n1.max(tiny));
        let m0 = resp.iter().zip(xs).map(|(r, x)| r * x).sum::<f64>() / n0s;
        let m1 = resp.iter().zip(xs).map(|(r, x)| (1.0 - r) * x).sum::<f64>() / n1s;
        let v0 = resp.iter().zip(xs).map(|(r, x)| r * (x - m0) * (x - m0)).sum::<f64>() / n0s;
        let v1 = resp
            .iter()
            .zip(xs)
            .map(|(r, x)| (1.0 - r) * (x - m1) * (x - m1))
            .sum::<f64>()
            / n1s;
        gm.means = [m0, m1];
        gm.variances = [v0 + VAR_FLOOR, v1 + VAR_FLOOR];
        gm.weights = [(n0 / n).max(tiny), (n1 / n).max(tiny)];
        gm.iterations = iter;
        let converged = (log_lik - gm.log_likelihood).abs() < LOG_LIK_TOL;
        gm.log_likelihood = log_lik;
        if converged {
            break;
        }
    }
    if gm.means[0] > gm.means[1] {
        gm.means.swap(0, 1);
        gm.variances.swap(0, 1);
        gm.weights.swap(0, 1);
    }
    gm
}

/// Small-loss split: clean where the low-mean component's posterior exceeds 0.5.
///
/// When the fitted means are (nearly) equal the mixture carries no signal;
/// the `ceil(n/2)` smallest losses are then declared clean, ties by index.
pub fn partition_small_loss(losses: &[f64]) -> PartitionResult {
    let n = losses.len();
    let gm = (n >= 2).then(|| fit_two_gaussians(losses));
    match gm {
        Some(gm) if (gm.means[1] - gm.means[0]).abs() >= MIN_MEAN_GAP => {
            let clean_posteriors: Vec<f64> = losses.iter().map(|&l| gm.low_posterior(l)).collect();
            let (clean_idx, noisy_idx) = (0..n).partition(|&i| clean_posteriors[i] > POSTERIOR_THRESHOLD);
            PartitionResult {
                clean_idx,
                noisy_idx,
                clean_posteriors,
                mixture: Some(gm),
                used_fallback: false,
            }
        }
        gm => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
            let keep = n.div_ceil(2);
            let mut clean_posteriors = vec![0.0; n];
            for &i in &order[..keep] {
                clean_posteriors[i] = 1.0;
            }
            let (clean_idx, noisy_idx) = (0..n).partition(|&i| clean_posteriors[i] > POSTERIOR_THRESHOLD);
            PartitionResult {
                clean_idx,
                noisy_idx,
                clean_posteriors,
                mixture: gm,
                used_fallback: true,
            }
        }
    }
}
