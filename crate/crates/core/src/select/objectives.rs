use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::nn::{dot, extract_last_layer, MlpModel};

/// Last-layer view of one sample: penultimate feature, logit gradient, observed class.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityFeatures {
    pub z: Vec<f64>,
    pub g: Vec<f64>,
    pub class: usize,
}

/// Similarity used inside the cleanliness objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleanSimilarity {
    /// Raw inner product of penultimate features.
    #[default]
    Dot,
    /// Inner product of unit-normalised features.
    Cosine,
}

/// Features for every sample of `ds`; gradients are taken against `targets[i]`.
pub fn utility_features(model: &MlpModel, ds: &Dataset, targets: &[Vec<f64>]) -> Result<Vec<UtilityFeatures>> {
    (0..ds.len())
        .map(|i| {
            let trace = model.forward(ds.x(i))?;
            let (z, g) = extract_last_layer(&trace, &targets[i]);
            Ok(UtilityFeatures {
                z,
                g,
                class: ds.observed(i),
            })
        })
        .collect()
}

/// `(z_j . z_i) * (g_j . g_i)`.
pub fn iota(i: &UtilityFeatures, j: &UtilityFeatures) -> f64 {
    dot(&j.z, &i.z) * dot(&j.g, &i.g)
}

pub(crate) fn similarity(kind: CleanSimilarity, j: &UtilityFeatures, i: &UtilityFeatures) -> f64 {
    match kind {
        CleanSimilarity::Dot => dot(&j.z, &i.z),
        CleanSimilarity::Cosine => {
            let norm = (dot(&j.z, &j.z) * dot(&i.z, &i.z)).sqrt();
            if norm > 0.0 {
                dot(&j.z, &i.z) / norm
            } else {
                0.0
            }
        }
    }
}

pub(crate) fn membership(set: &[usize], n: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &i in set {
        mask[i] = true;
    }
    mask
}

/// Informativeness of `candidate` for the rest of `pool`.
///
/// Each pool sample outside the candidate set contributes its largest `iota`
/// against a same-class candidate, or 0 when its class has no candidate.
/// Summation follows pool order.
pub fn info_objective(candidate: &[usize], pool: &[usize], feats: &[UtilityFeatures]) -> f64 {
    let inside = membership(candidate, feats.len());
    let mut total = 0.0;
    for &i in pool {
        if inside[i] {
            continue;
        }
        let best = candidate
            .iter()
            .filter(|&&j| feats[j].class == feats[i].class)
            .map(|&j| iota(&feats[i], &feats[j]))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        total += best.unwrap_or(0.0);
    }
    total
}

/// Same-class similarity between `subset` and the rest of `pool`.
///
/// Summation follows pool order on the outside and subset order inside.
pub fn clean_objective(subset: &[usize], pool: &[usize], feats: &[UtilityFeatures], kind: CleanSimilarity) -> f64 {
    let inside = membership(subset, feats.len());
    let mut total = 0.0;
    for &i in pool {
        if inside[i] {
            continue;
        }
        let mut s = 0.0;
        for &j in subset {
            if feats[j].class == feats[i].class {
                s += similarity(kind, &feats[j], &feats[i]);
            }
        }
        total += s;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feat(z: &[f64], g: &[f64], class: usize) -> UtilityFeatures {
        UtilityFeatures {
            z: z.to_vec(),
            g: g.to_vec(),
            class,
        }
    }

    #[test]
    fn iota_examples() {
        let a = feat(&[1.0, 0.0], &[1.0, -1.0, 0.0], 0);
        assert_eq!(iota(&a, &a), 2.0);
        let b = feat(&[0.0, 3.0], &[1.0, -1.0, 0.0], 0);
        assert_eq!(iota(&a, &b), 0.0);
        // z.z = 2, g.g = -0.5
        let c = feat(&[1.0, 1.0], &[0.5, -0.5], 0);
        let d = feat(&[1.0, 1.0], &[-0.5, 0.5], 0);
        assert_eq!(dot(&c.z, &d.z), 2.0);
        assert_eq!(dot(&c.g, &d.g), -0.5);
        assert_eq!(iota(&c, &d), -1.0);
    }

    #[test]
    fn info_empty_complement_is_zero() {
        let feats = vec![feat(&[1.0], &[1.0, -1.0], 0), feat(&[2.0], &[1.0, -1.0], 1)];
        assert_eq!(info_objective(&[0, 1], &[0, 1], &feats), 0.0);
    }

    #[test]
    fn info_three_same_class_samples() {
        let feats = vec![
            feat(&[1.0, 0.5], &[0.3, -0.3], 0),
            feat(&[0.2, 1.0], &[-0.1, 0.1], 0),
            feat(&[2.0, -1.0], &[0.5, -0.5], 0),
        ];
        // hand computation: iota(b, a) = (0.2 + 0.5)(-0.06) = -0.042; iota(c, a) = (2 - 0.5)(0.3) = 0.45
        let expected = 0.7 * (-0.06) + 1.5 * 0.3;
        assert!((info_objective(&[0], &[0, 1, 2], &feats) - expected).abs() < 1e-15);
    }

    #[test]
    fn info_ignores_other_classes() {
        let feats = vec![feat(&[1.0], &[1.0, -1.0], 0), feat(&[1.0], &[1.0, -1.0], 1)];
        assert_eq!(info_objective(&[0], &[0, 1], &feats), 0.0);
    }

    #[test]
    fn info_with_duplicated_pool() {
        let originals = vec![
            feat(&[1.0, 0.0], &[0.6, -0.6], 0),
            feat(&[0.0, 1.0], &[0.5, -0.5], 0),
            feat(&[0.0, 2.0], &[-0.2, 0.2], 1),
            feat(&[1.5, 0.1], &[-0.3, 0.3], 1),
        ];
        let mut feats = originals.clone();
        feats.extend(originals.iter().cloned());
        let pool: Vec<usize> = (0..8).collect();
        let candidate: Vec<usize> = (4..8).collect();
        // enumeration: per pool sample, the max over every same-class candidate
        let mut enumerated = 0.0;
        let mut self_match = 0.0;
        for i in 0..4 {
            let mut best = f64::NEG_INFINITY;
            for &j in &candidate {
                if feats[j].class == feats[i].class {
                    let v = dot(&feats[j].z, &feats[i].z) * dot(&feats[j].g, &feats[i].g);
                    best = best.max(v);
                }
            }
            enumerated += best;
            self_match += dot(&feats[i].z, &feats[i].z) * dot(&feats[i].g, &feats[i].g);
        }
        let v = info_objective(&candidate, &pool, &feats);
        assert_eq!(v, enumerated);
        // here the self-match is each sample's maximum
        assert!((v - self_match).abs() < 1e-12);
    }

    #[test]
    fn clean_examples() {
        let feats = vec![feat(&[1.0, 0.0], &[0.0, 0.0], 0), feat(&[1.0, 0.0], &[0.0, 0.0], 0)];
        assert_eq!(clean_objective(&[0], &[0, 1], &feats, CleanSimilarity::Dot), 1.0);
        assert_eq!(clean_objective(&[0, 1], &[0, 1], &feats, CleanSimilarity::Dot), 0.0);
    }

    #[test]
    fn clean_four_sample_enumeration() {
        let feats = vec![
            feat(&[1.0, 2.0], &[0.0; 2], 0),
            feat(&[-0.5, 1.5], &[0.0; 2], 0),
            feat(&[3.0, 0.1], &[0.0; 2], 0),
            feat(&[0.7, -2.0], &[0.0; 2], 1),
        ];
        let subset = [2, 3];
        let mut looped = 0.0;
        for j in subset {
            for i in [0, 1] {
                if feats[i].class == feats[j].class {
                    looped += feats[i].z[0] * feats[j].z[0] + feats[i].z[1] * feats[j].z[1];
                }
            }
        }
        let v = clean_objective(&subset, &[0, 1, 2, 3], &feats, CleanSimilarity::Dot);
        assert!((v - looped).abs() < 1e-10);
    }

    #[test]
    fn cosine_variant_is_scale_free() {
        let a = vec![feat(&[1.0, 0.0], &[0.0; 2], 0), feat(&[5.0, 0.0], &[0.0; 2], 0)];
        assert_eq!(clean_objective(&[0], &[0, 1], &a, CleanSimilarity::Cosine), 1.0);
    }

    fn arb_feat() -> impl Strategy<Value = UtilityFeatures> {
        (prop::collection::vec(-2.0f64..2.0, 3), prop::collection::vec(-1.0f64..1.0, 2))
            .prop_map(|(z, mut g)| {
                let s: f64 = g.iter().sum();
                g.push(-s);
                UtilityFeatures { z, g, class: 0 }
            })
    }

    proptest! {
        #[test]
        fn iota_symmetric_and_bilinear(a in arb_feat(), b in arb_feat(), c in 0.1f64..5.0) {
            prop_assert_eq!(iota(&a, &b), iota(&b, &a));
            let mut scaled = a.clone();
            scaled.z.iter_mut().for_each(|v| *v *= c);
            prop_assert!((iota(&scaled, &b) - c * iota(&a, &b)).abs() <= 1e-12 * (1.0 + iota(&a, &b).abs() * c));
            let mut scaled = a.clone();
            scaled.g.iter_mut().for_each(|v| *v *= c);
            prop_assert!((iota(&scaled, &b) - c * iota(&a, &b)).abs() <= 1e-12 * (1.0 + iota(&a, &b).abs() * c));
        }

        #[test]
        fn info_scales_quadratically_in_gradients(
            feats in prop::collection::vec(arb_feat(), 4..10), c in 0.1f64..4.0
        ) {
            let pool: Vec<usize> = (0..feats.len()).collect();
            let base = info_objective(&[0, 1], &pool, &feats);
            let scaled: Vec<UtilityFeatures> = feats
                .iter()
                .map(|f| UtilityFeatures { g: f.g.iter().map(|v| v * c).collect(), ..f.clone() })
                .collect();
            let v = info_objective(&[0, 1], &pool, &scaled);
            prop_assert!((v - c * c * base).abs() <= 1e-9 * (1.0 + base.abs() * c * c));
        }
    }
}
