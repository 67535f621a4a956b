//! Datasets, corruption regimes, and input-space augmentation.
//!
//! Labels are stored as class indices, which makes "exactly one-hot" hold by
//! construction; [`Dataset::observed_one_hot`] materialises the vector form.
//! Open-set samples carry the reserved clean class `C` (one past the last
//! in-distribution class), so they never compare equal to an observed label.

mod augment;
mod csvio;
mod longtail;
mod noise;
mod synthetic;

pub use augment::{augment, augment_with, mixup, mixup_with_beta};
pub use csvio::{load_csv, write_csv};
pub use longtail::{apply_longtail, longtail_sizes, ImbalanceSpec};
pub use noise::{
    cyclic_pair_map, inject_asymmetric, inject_noise, inject_openset, inject_symmetric, NoiseKind,
    NoiseSpec, OutlierGenerator,
};
pub use synthetic::{gen_synthetic, class_means, SyntheticKind};

use crate::error::{Error, Result};
use crate::nn::one_hot;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    observed: Vec<usize>,
    clean: Vec<usize>,
    openset: Vec<bool>,
    num_classes: usize,
}

impl Dataset {
    /// Builds a dataset whose observed labels equal its clean labels.
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let n = labels.len();
        Dataset::with_hidden(features, labels.clone(), labels, vec![false; n], num_classes)
    }

    pub fn with_hidden(
        features: Vec<Vec<f64>>,
        observed: Vec<usize>,
        clean: Vec<usize>,
        openset: Vec<bool>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = features.len();
        if num_classes < 2 {
            return Err(Error::config("a dataset needs at least two classes"));
        }
        for len in [observed.len(), clean.len(), openset.len()] {
            if len != n {
                return Err(Error::Dimension { expected: n, got: len });
            }
        }
        if let Some(first) = features.first() {
            if let Some(row) = features.iter().find(|r| r.len() != first.len()) {
                return Err(Error::Dimension {
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        if observed.iter().any(|&c| c >= num_classes) {
            return Err(Error::config("observed label out of range"));
        }
        for i in 0..n {
            let valid = if openset[i] {
                clean[i] == num_classes
            } else {
                clean[i] < num_classes
            };
            if !valid {
                return Err(Error::config(format!("inconsistent clean label at row {i}")));
            }
        }
        Ok(Dataset {
            features,
            observed,
            clean,
            openset,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    /// Observed (possibly corrupted) label of every sample.
    pub fn observed_labels(&self) -> &[usize] {
        &self.observed
    }

    pub fn observed(&self, i: usize) -> usize {
        self.observed[i]
    }

    pub fn observed_one_hot(&self, i: usize) -> Vec<f64> {
        one_hot(self.observed[i], self.num_classes)
    }

    /// Hidden ground truth. Only evaluation and diagnostics may read this.
    pub fn hidden_clean_labels(&self) -> &[usize] {
        &self.clean
    }

    pub fn openset_mask(&self) -> &[bool] {
        &self.openset
    }

    /// Whether the observed label of sample `i` is correct (never true for open-set samples).
    pub fn is_truly_clean(&self, i: usize) -> bool {
        !self.openset[i] && self.observed[i] == self.clean[i]
    }

    /// Fraction of samples whose observed label is wrong or out-of-distribution.
    pub fn noise_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let noisy = (0..self.len()).filter(|&i| !self.is_truly_clean(i)).count();
        noisy as f64 / self.len() as f64
    }

    /// Per-class counts of observed labels.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &c in &self.observed {
            counts[c] += 1;
        }
        counts
    }

    /// Replaces the hidden clean labels (diagnostic tooling and leakage tests).
    pub fn with_hidden_clean_labels(mut self, clean: Vec<usize>) -> Result<Self> {
        if clean.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: clean.len(),
            });
        }
        self.clean = clean;
        Ok(self)
    }

    /// Rows `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            observed: indices.iter().map(|&i| self.observed[i]).collect(),
            clean: indices.iter().map(|&i| self.clean[i]).collect(),
            openset: indices.iter().map(|&i| self.openset[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Vec<Vec<f64>>, &mut Vec<usize>, &mut Vec<usize>, &mut Vec<bool>) {
        (&mut self.features, &mut self.observed, &mut self.clean, &mut self.openset)
    }
}
