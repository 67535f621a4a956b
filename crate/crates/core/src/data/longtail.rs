use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Exponential long-tail profile: class `c` keeps `round(n_max * ratio^(-c/(C-1)))` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSpec {
    pub ratio: f64,
}

pub fn longtail_sizes(n_max: usize, ratio: f64, num_classes: usize) -> Vec<usize> {
    (0..num_classes)
        .map(|c| {
            let exponent = -(c as f64) / (num_classes - 1) as f64;
            (n_max as f64 * ratio.powf(exponent)).round() as usize
        })
        .collect()
}

/// Subsamples each class to its long-tail size, keeping surviving rows in input order.
///
/// `n_max` is the largest observed class count. The rows kept inside a class
/// are drawn from a per-class stream, so sizes depend only on the spec and
/// the per-class counts.
pub fn apply_longtail(ds: &Dataset, spec: ImbalanceSpec, seed: u64) -> Result<Dataset> {
    if !(spec.ratio >= 1.0 && spec.ratio.is_finite()) {
        return Err(Error::config("imbalance ratio must be >= 1"));
    }
    let counts = ds.class_counts();
    let n_max = counts.iter().copied().max().unwrap_or(0);
    let sizes = longtail_sizes(n_max, spec.ratio, ds.num_classes());
    let mut keep = vec![false; ds.len()];
    for (c, &target) in sizes.iter().enumerate() {
        if counts[c] < target {
            return Err(Error::Sizing {
                class: c,
                available: counts[c],
                required: target,
            });
        }
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.observed(i) == c).collect();
        let mut rng = rng::seeded(seed, 0x6c7400 + c as u64);
        members.shuffle(&mut rng);
        for &i in &members[..target] {
            keep[i] = true;
        }
    }
    let rows: Vec<usize> = (0..ds.len()).filter(|&i| keep[i]).collect();
    Ok(ds.subset(&rows))
}
