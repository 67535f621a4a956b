use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Symmetric,
    Asymmetric,
    Openset,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(NoiseKind::Symmetric),
            "asymmetric" => Ok(NoiseKind::Asymmetric),
            "openset" | "open_set" => Ok(NoiseKind::Openset),
            other => Err(Error::config(format!("unknown noise kind `{other}`"))),
        }
    }
}

/// Out-of-distribution feature generator for open-set noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutlierGenerator {
    Gaussian { center: Vec<f64>, std: f64 },
}

impl OutlierGenerator {
    /// Gaussian with standard deviation `spread`, centred at least
    /// `factor * spread` away from every observed class mean.
    ///
    /// The centre is the centroid of class means pushed along the last axis
    /// by `factor * spread + max_c |mean_c - centroid|`, so the triangle
    /// inequality bounds the distance to each mean from below.
    pub fn displaced_from(ds: &Dataset, spread: f64, factor: f64) -> Self {
        let dim = ds.dim();
        let mut sums = vec![vec![0.0; dim]; ds.num_classes()];
        let mut counts = vec![0usize; ds.num_classes()];
        for i in 0..ds.len() {
            let c = ds.observed(i);
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(ds.x(i)) {
                *s += v;
            }
        }
        let means: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .filter(|(_, &n)| n > 0)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();
        let mut center = vec![0.0; dim];
        for m in &means {
            for (c, v) in center.iter_mut().zip(m) {
                *c += v / means.len() as f64;
            }
        }
        let radius = means
            .iter()
            .map(|m| {
                m.iter()
                    .zip(&center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if dim > 0 {
            center[dim - 1] += factor * spread + radius;
        }
        OutlierGenerator::Gaussian {
            center,
            std: spread,
        }
    }

    fn sample(&self, rng: &mut rng::Rng) -> Vec<f64> {
        match self {
            OutlierGenerator::Gaussian { center, std } => {
                let normal = Normal::new(0.0, *std).expect("validated std");
                center.iter().map(|c| c + normal.sample(rng)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rate: f64,
    /// Flip target per class (asymmetric only).
    pub pair_map: Option<Vec<usize>>,
    /// Outlier source (open-set only).
    pub outliers: Option<OutlierGenerator>,
}

impl NoiseSpec {
    pub fn symmetric(rate: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Symmetric,
            rate,
            pair_map: None,
            outliers: None,
        }
    }
}

/// `c -> (c + 1) mod C`.
pub fn cyclic_pair_map(num_classes: usize) -> Vec<usize> {
    (0..num_classes).map(|c| (c + 1) % num_classes).collect()
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("noise rate {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Flips each label with probability `rate` to a uniformly drawn *different* class.
pub fn inject_symmetric(ds: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    check_rate(rate)?;
    let mut out = ds.clone();
    let c = ds.num_classes();
    let mut rng = rng::seeded(seed, 0x73796d);
    let (_, observed, _, _) = out.parts_mut();
    for label in observed.iter_mut() {
        if rng.random::<f64>() < rate {
            // draw from the C-1 other classes
            let k = rng.random_range(0..c - 1);
            *label = if k >= *label { k + 1 } else { k };
        }
    }
    Ok(out)
}

pub fn inject_asymmetric(ds: &Dataset, rate: f64, pair_map: &[usize], seed: u64) -> Result<Dataset> {
    check_rate(rate)?;
    let c = ds.num_classes();
    if pair_map.len() != c || pair_map.iter().any(|&t| t >= c) {
        return Err(Error::config("pair map must send every class to a class in [0, C)"));
    }
    let mut out = ds.clone();
    let mut rng = rng::seeded(seed, 0x61736d);
    let (_, observed, _, _) = out.parts_mut();
    for label in observed.iter_mut() {
        // one draw per sample regardless of the map keeps the stream aligned
        let flip = rng.random::<f64>() < rate;
        if flip {
            *label = pair_map[*label];
        }
    }
    Ok(out)
}

/// Replaces a `rate` fraction of samples by outlier draws carrying a random in-distribution label.
pub fn inject_openset(ds: &Dataset, rate: f64, outliers: &OutlierGenerator, seed: u64) -> Result<Dataset> {
    check_rate(rate)?;
    let OutlierGenerator::Gaussian { center, std } = outliers;
    if center.len() != ds.dim() {
        return Err(Error::Dimension {
            expected: ds.dim(),
            got: center.len(),
        });
    }
    if !(*std >= 0.0 && std.is_finite()) {
        return Err(Error::config("outlier std must be finite and nonnegative"));
    }
    let c = ds.num_classes();
    let mut out = ds.clone();
    let mut rng = rng::seeded(seed, 0x6f7073);
    let (features, observed, clean, openset) = out.parts_mut();
    for i in 0..features.len() {
        if rng.random::<f64>() < rate {
            features[i] = outliers.sample(&mut rng);
            observed[i] = rng.random_range(0..c);
            clean[i] = c;
            openset[i] = true;
        }
    }
    Ok(out)
}

pub fn inject_noise(ds: &Dataset, spec: &NoiseSpec, seed: u64) -> Result<Dataset> {
    match spec.kind {
        NoiseKind::Symmetric => inject_symmetric(ds, spec.rate, seed),
        NoiseKind::Asymmetric => {
            let default_map;
            let map = match &spec.pair_map {
                Some(m) => m.as_slice(),
                None => {
                    default_map = cyclic_pair_map(ds.num_classes());
                    &default_map
                }
            };
            inject_asymmetric(ds, spec.rate, map, seed)
        }
        NoiseKind::Openset => {
            let outliers = spec
                .outliers
                .as_ref()
                .ok_or_else(|| Error::config("open-set noise needs an outlier generator"))?;
            inject_openset(ds, spec.rate, outliers, seed)
        }
    }
}
