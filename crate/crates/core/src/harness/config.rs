//! Experiment configuration in a flat `key = value` text format.
//!
//! Blank lines and `#` comments are ignored. An optional `preset = NAME`
//! line must come first and supplies the values the remaining keys override.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::NoiseKind;
use crate::detect::WarmupConfig;
use crate::error::{Error, Result};
use crate::meta::MetaConfig;
use crate::nn::LrSchedule;
use crate::select::CleanSimilarity;
use crate::data::SyntheticKind;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        kind: SyntheticKind,
        n_per_class: usize,
        dim: usize,
        spread: f64,
        /// Size per class of the separate clean test set.
        test_n_per_class: usize,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    MaxUtility,
    Random,
    MostConfident,
    WeightOnly,
    InfoOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::MaxUtility,
        Strategy::Random,
        Strategy::MostConfident,
        Strategy::WeightOnly,
        Strategy::InfoOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::MaxUtility => "max_utility",
            Strategy::Random => "random",
            Strategy::MostConfident => "most_confident",
            Strategy::WeightOnly => "weight_only",
            Strategy::InfoOnly => "info_only",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::config(format!("unknown selection strategy `{s}`")))
    }
}

/// Which target the selection gradients are taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionTarget {
    Observed,
    Robust,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub num_classes: usize,
    pub noise_kind: NoiseKind,
    pub noise_rate: f64,
    /// Long-tail ratio; 1 disables subsampling.
    pub imbalance_ratio: f64,
    pub hidden: Vec<usize>,
    pub schedule: LrSchedule,
    /// Total meta-training iterations `T`.
    pub total_iters: usize,
    /// Iterations before robust labels may change; defaults to `T / 4`.
    pub robust_start: Option<usize>,
    /// Iterations between re-selections; defaults to one epoch.
    pub select_interval: Option<usize>,
    /// Robust labels change only below this rate; defaults to the schedule midpoint.
    pub lr_threshold: Option<f64>,
    pub kappa: f64,
    pub n_candidates: usize,
    pub m_val: usize,
    pub k_lower: usize,
    pub window: usize,
    pub batch_size: usize,
    pub meta: MetaConfig,
    pub warmup: WarmupConfig,
    pub strategy: Strategy,
    pub clean_similarity: CleanSimilarity,
    pub selection_target: SelectionTarget,
    /// Train on `D^(c) \ D^(v)` instead of `D \ D^(v)`.
    pub train_on_pseudo_clean: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            // 1124 per class leaves 1124/522/242/112 = 2000 samples at ratio 10
            data: DataSource::Synthetic {
                kind: SyntheticKind::GaussianBlobs,
                n_per_class: 1124,
                dim: 4,
                spread: 0.3,
                test_n_per_class: 250,
            },
            num_classes: 4,
            noise_kind: NoiseKind::Symmetric,
            noise_rate: 0.4,
            imbalance_ratio: 10.0,
            hidden: vec![32],
            schedule: LrSchedule {
                eta_max: 0.1,
                eta_min: 0.001,
                cycle_len: 1000,
                cycle_mult: 1.0,
            },
            total_iters: 3000,
            robust_start: None,
            select_interval: None,
            lr_threshold: None,
            kappa: 0.9,
            n_candidates: 200,
            m_val: 10,
            k_lower: 50,
            window: 5,
            batch_size: 32,
            meta: MetaConfig::default(),
            warmup: WarmupConfig {
                max_epochs: 60,
                patience: 10,
                eta: 0.1,
                batch_size: 32,
            },
            strategy: Strategy::MaxUtility,
            clean_similarity: CleanSimilarity::Dot,
            selection_target: SelectionTarget::Observed,
            train_on_pseudo_clean: false,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Named starting points: `default` and the reduced `tiny`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(ExperimentConfig::default()),
            "tiny" => Ok(ExperimentConfig {
                data: DataSource::Synthetic {
                    kind: SyntheticKind::GaussianBlobs,
                    n_per_class: 120,
                    dim: 4,
                    spread: 0.3,
                    test_n_per_class: 50,
                },
                hidden: vec![16],
                schedule: LrSchedule {
                    eta_max: 0.1,
                    eta_min: 0.001,
                    cycle_len: 60,
                    cycle_mult: 1.0,
                },
                total_iters: 120,
                n_candidates: 30,
                m_val: 3,
                k_lower: 8,
                warmup: WarmupConfig {
                    max_epochs: 10,
                    patience: 2,
                    eta: 0.1,
                    batch_size: 16,
                },
                batch_size: 16,
                ..ExperimentConfig::default()
            }),
            other => Err(Error::config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&self.hidden);
        dims.push(self.num_classes);
        dims
    }

    pub fn robust_start(&self) -> usize {
        self.robust_start.unwrap_or(self.total_iters / 4)
    }

    pub fn lr_threshold(&self) -> f64 {
        self.lr_threshold
            .unwrap_or((self.schedule.eta_max + self.schedule.eta_min) / 2.0)
    }

    /// Iterations in one pass over `n` samples.
    pub fn epoch_iters(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size).max(1)
    }

    pub fn select_interval(&self, n: usize) -> usize {
        self.select_interval.unwrap_or_else(|| self.epoch_iters(n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("num_classes must be at least 2"));
        }
        if let DataSource::Synthetic {
            n_per_class,
            dim,
            spread,
            test_n_per_class,
            ..
        } = &self.data
        {
            if *n_per_class == 0 || *test_n_per_class == 0 || *dim < 2 {
                return Err(Error::config("synthetic data needs n_per_class >= 1, test_n_per_class >= 1, dim >= 2"));
            }
            if !(*spread >= 0.0 && spread.is_finite()) {
                return Err(Error::config("spread must be non-negative"));
            }
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::config("noise_rate must lie in [0, 1)"));
        }
        if !(self.imbalance_ratio >= 1.0 && self.imbalance_ratio.is_finite()) {
            return Err(Error::config("imbalance_ratio must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        self.schedule.validate()?;
        self.meta.validate()?;
        if self.m_val == 0 || self.m_val >= self.k_lower {
            return Err(Error::config(format!(
                "M ({}) must satisfy 1 <= M < K ({})",
                self.m_val, self.k_lower
            )));
        }
        if self.n_candidates == 0 {
            return Err(Error::config("N must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::config("window must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::config("kappa must lie in [0, 1]"));
        }
        if let Some(u) = self.select_interval {
            if u == 0 || (self.total_iters > 0 && u > self.total_iters) {
                return Err(Error::config(format!(
                    "select_interval ({u}) must lie in [1, T] (T = {})",
                    self.total_iters
                )));
            }
        }
        if let Some(th) = self.lr_threshold {
            if !(th.is_finite() && th >= 0.0) {
                return Err(Error::config("lr_threshold must be non-negative"));
            }
        }
        if self.warmup.max_epochs == 0 || self.warmup.batch_size == 0 || !(self.warmup.eta > 0.0) {
            return Err(Error::config("warm-up needs epochs >= 1, batch size >= 1 and a positive rate"));
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses config text; `origin` names the source in errors and anchors relative CSV paths.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let base = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut entries = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(k + 1, format!("expected `key = value`, found `{line}`")))?;
            entries.push((k + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let mut cfg = ExperimentConfig::default();
        let mut csv_train: Option<PathBuf> = None;
        let mut csv_test: Option<PathBuf> = None;
        let mut generator: Option<String> = None;
        for (pos, (line, key, value)) in entries.iter().enumerate() {
            let line = *line;
            let bad = |what: &str| err(line, format!("invalid {what} `{value}` for `{key}`"));
            let usize_v = || value.parse::<usize>().map_err(|_| bad("integer"));
            let f64_v = || {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad("number"))
            };
            let bool_v = || value.parse::<bool>().map_err(|_| bad("boolean"));
            let synth = |cfg: &mut ExperimentConfig| -> Result<()> {
                if !matches!(cfg.data, DataSource::Synthetic { .. }) {
                    cfg.data = ExperimentConfig::default().data;
                }
                let DataSource::Synthetic {
                    n_per_class,
                    dim,
                    spread,
                    test_n_per_class,
                    ..
                } = &mut cfg.data
                else {
                    unreachable!()
                };
                match key.as_str() {
                    "n_per_class" => *n_per_class = usize_v()?,
                    "dim" => *dim = usize_v()?,
                    "spread" => *spread = f64_v()?,
                    "test_n_per_class" => *test_n_per_class = usize_v()?,
                    _ => unreachable!(),
                }
                Ok(())
            };
            match key.as_str() {
                "preset" => {
                    if pos != 0 {
                        return Err(err(line, "`preset` must be the first entry".into()));
                    }
                    cfg = ExperimentConfig::preset(value).map_err(|e| err(line, e.to_string()))?;
                }
                "seed" => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
                "generator" => generator = Some(value.clone()),
                "n_per_class" | "dim" | "spread" | "test_n_per_class" => synth(&mut cfg)?,
                "csv_path" => csv_train = Some(base.join(value)),
                "test_csv_path" => csv_test = Some(base.join(value)),
                "num_classes" => cfg.num_classes = usize_v()?,
                "noise_kind" => cfg.noise_kind = value.parse().map_err(|e: Error| err(line, e.to_string()))?,
                "noise_rate" => cfg.noise_rate = f64_v()?,
                "imbalance_ratio" => cfg.imbalance_ratio = f64_v()?,
                "hidden" => {
                    cfg.hidden = value
                        .split(',')
                        .map(|s| s.trim())
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<usize>().map_err(|_| bad("layer list")))
                        .collect::<Result<_>>()?
                }
                "eta_max" => cfg.schedule.eta_max = f64_v()?,
                "eta_min" => cfg.schedule.eta_min = f64_v()?,
                "cycle_len" => cfg.schedule.cycle_len = usize_v()?,
                "cycle_mult" => cfg.schedule.cycle_mult = f64_v()?,
                "total_iters" => cfg.total_iters = usize_v()?,
                "robust_start" => cfg.robust_start = Some(usize_v()?),
                "select_interval" => cfg.select_interval = Some(usize_v()?),
                "lr_threshold" => cfg.lr_threshold = Some(f64_v()?),
                "kappa" => cfg.kappa = f64_v()?,
                "n_candidates" => cfg.n_candidates = usize_v()?,
                "m_val" => cfg.m_val = usize_v()?,
                "k_lower" => cfg.k_lower = usize_v()?,
                "window" => cfg.window = usize_v()?,
                "batch_size" => cfg.batch_size = usize_v()?,
                "p_mix" => cfg.meta.p_mix = f64_v()?,
                "k_kl" => cfg.meta.k_kl = f64_v()?,
                "lambda0" => cfg.meta.lambda0 = f64_v()?,
                "mixup_alpha" => cfg.meta.mixup_alpha = f64_v()?,
                "augment_strength" => cfg.meta.augment_strength = f64_v()?,
                "eta_omega" => cfg.meta.eta_omega = f64_v()?,
                "flip_lambda_sign" => cfg.meta.flip_lambda_sign = bool_v()?,
                "warmup_epochs" => cfg.warmup.max_epochs = usize_v()?,
                "warmup_patience" => cfg.warmup.patience = usize_v()?,
                "warmup_eta" => cfg.warmup.eta = f64_v()?,
                "warmup_batch_size" => cfg.warmup.batch_size = usize_v()?,
                "strategy" => cfg.strategy = value.parse().map_err(|e: Error| err(line, e.to_string()))?,
                "clean_similarity" => {
                    cfg.clean_similarity = match value.as_str() {
                        "dot" => CleanSimilarity::Dot,
                        "cosine" => CleanSimilarity::Cosine,
                        _ => return Err(bad("similarity")),
                    }
                }
                "selection_target" => {
                    cfg.selection_target = match value.as_str() {
                        "observed" => SelectionTarget::Observed,
                        "robust" => SelectionTarget::Robust,
                        _ => return Err(bad("selection target")),
                    }
                }
                "train_on_pseudo_clean" => cfg.train_on_pseudo_clean = bool_v()?,
                _ => return Err(err(line, format!("unknown key `{key}`"))),
            }
        }
        match generator.as_deref() {
            Some("csv") => {
                let train = csv_train.ok_or_else(|| Error::config("generator = csv needs csv_path"))?;
                let test = csv_test.ok_or_else(|| Error::config("generator = csv needs test_csv_path"))?;
                cfg.data = DataSource::Csv { train, test };
            }
            Some(name) => {
                let kind: SyntheticKind = name.parse()?;
                if let DataSource::Synthetic { kind: k, .. } = &mut cfg.data {
                    *k = kind;
                }
            }
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
