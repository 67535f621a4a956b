use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Isotropic Gaussians around points on the unit circle (first two coordinates).
    GaussianBlobs,
    /// Interleaved spiral arms in the first two coordinates.
    Spirals,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_blobs" | "blobs" => Ok(SyntheticKind::GaussianBlobs),
            "spirals" => Ok(SyntheticKind::Spirals),
            other => Err(Error::config(format!("unknown generator `{other}`"))),
        }
    }
}

/// Blob centres: class `c` sits at angle `2*pi*c/C` on the unit circle, zero elsewhere.
pub fn class_means(num_classes: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..num_classes)
        .map(|c| {
            let angle = 2.0 * PI * c as f64 / num_classes as f64;
            let mut m = vec![0.0; dim];
            m[0] = angle.cos();
            m[1] = angle.sin();
            m
        })
        .collect()
}

/// Generates `n_per_class` samples per class, rows grouped by class.
pub fn gen_synthetic(
    kind: SyntheticKind,
    num_classes: usize,
    n_per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes < 2 || n_per_class < 1 || dim < 2 {
        return Err(Error::config(
            "synthetic data needs C >= 2, n_per_class >= 1 and d >= 2",
        ));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::config("spread must be a finite nonnegative number"));
    }
    let mut rng = rng::seeded(seed, 0x73796e);
    let noise = Normal::new(0.0, spread).map_err(|e| Error::config(e.to_string()))?;
    let mut features = Vec::with_capacity(num_classes * n_per_class);
    let mut labels = Vec::with_capacity(num_classes * n_per_class);
    let means = class_means(num_classes, dim);
    for c in 0..num_classes {
        for k in 0..n_per_class {
            let mut x: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            match kind {
                SyntheticKind::GaussianBlobs => {
                    for (v, m) in x.iter_mut().zip(&means[c]) {
                        *v += m;
                    }
                }
                SyntheticKind::Spirals => {
                    let t = (k as f64 + 0.5) / n_per_class as f64;
                    let radius = 0.2 + t;
                    let angle = 2.0 * PI * c as f64 / num_classes as f64 + 1.75 * PI * t;
                    x[0] += radius * angle.cos();
                    x[1] += radius * angle.sin();
                }
            }
            features.push(x);
            labels.push(c);
        }
    }
    Dataset::new(features, labels, num_classes)
}
