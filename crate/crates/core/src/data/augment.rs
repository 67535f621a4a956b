use rand_distr::{Beta, Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

/// `x + eps`, `eps ~ N(0, strength^2)` i.i.d. per coordinate.
pub fn augment(x: &[f64], strength: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = rng::seeded(seed, 0x617567);
    augment_with(&mut rng, x, strength)
}

pub fn augment_with(rng: &mut rng::Rng, x: &[f64], strength: f64) -> Result<Vec<f64>> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::config("augmentation strength must be positive"));
    }
    let normal = Normal::new(0.0, strength).map_err(|e| Error::config(e.to_string()))?;
    Ok(x.iter().map(|v| v + normal.sample(rng)).collect())
}

/// Convex combination of a training and a validation pair with `beta ~ Beta(alpha, alpha)`.
pub fn mixup(
    train: (&[f64], &[f64]),
    val: (&[f64], &[f64]),
    alpha: f64,
    rng: &mut rng::Rng,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config("mixup alpha must be positive"));
    }
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::config(e.to_string()))?
        .sample(rng);
    let (x, y) = mixup_with_beta(train, val, beta);
    Ok((x, y, beta))
}

pub fn mixup_with_beta(train: (&[f64], &[f64]), val: (&[f64], &[f64]), beta: f64) -> (Vec<f64>, Vec<f64>) {
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(u, v)| beta * u + (1.0 - beta) * v).collect()
    };
    (mix(train.0, val.0), mix(train.1, val.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::one_hot;

    #[test]
    fn small_strength_barely_moves() {
        let x = [1.0, -2.0, 3.0];
        let y = augment(&x, 1e-12, 5).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(augment(&x, 0.0, 5).is_err());
    }

    #[test]
    fn augmentation_is_deterministic() {
        let x = [0.5; 4];
        assert_eq!(augment(&x, 0.3, 9).unwrap(), augment(&x, 0.3, 9).unwrap());
        assert_ne!(augment(&x, 0.3, 9).unwrap(), augment(&x, 0.3, 10).unwrap());
    }

    #[test]
    fn augmentation_noise_has_zero_mean() {
        let x = [1.0, 2.0];
        let strength = 0.5;
        let n = 10_000;
        let mut rng = rng::seeded(1, 2);
        let mut sums = [0.0; 2];
        for _ in 0..n {
            let y = augment_with(&mut rng, &x, strength).unwrap();
            for k in 0..2 {
                sums[k] += y[k] - x[k];
            }
        }
        for s in sums {
            assert!((s / n as f64).abs() < 3.0 * strength / (n as f64).sqrt());
        }
    }

    #[test]
    fn forced_beta_cases() {
        let (xi, yi) = (vec![1.0, 2.0], one_hot(0, 3));
        let (xj, yj) = (vec![-1.0, 0.0], one_hot(2, 3));
        let (x, y) = mixup_with_beta((&xi, &yi), (&xj, &yj), 1.0);
        assert_eq!((x, y), (xi.clone(), yi.clone()));
        let (_, y) = mixup_with_beta((&xi, &yi), (&xj, &yj), 0.5);
        assert_eq!(y, vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn uniform_beta_has_mean_half() {
        let mut rng = rng::seeded(3, 4);
        let (x, y) = (vec![0.0], one_hot(0, 2));
        let n = 10_000;
        let mut total = 0.0;
        for _ in 0..n {
            let (_, ymix, beta) = mixup((&x, &y), (&x, &one_hot(1, 2)), 1.0, &mut rng).unwrap();
            assert!((ymix.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            total += beta;
        }
        assert!((total / n as f64 - 0.5).abs() < 0.015);
    }
}
