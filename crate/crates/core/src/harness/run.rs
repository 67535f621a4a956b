use rand::seq::SliceRandom;

use super::config::{DataSource, ExperimentConfig, SelectionTarget, Strategy};
use super::metrics::MetricsRecord;
use crate::data::{
    apply_longtail, cyclic_pair_map, gen_synthetic, inject_noise, load_csv, Dataset, ImbalanceSpec, NoiseKind,
    NoiseSpec, OutlierGenerator,
};
use crate::detect::{
    build_candidate_subset, partition_small_loss, per_sample_losses, update_moving_avg, warmup_train,
    PartitionResult, SampleState, WarmupReport,
};
use crate::error::{Error, Result};
use crate::meta::{meta_train_step, MetaBatch};
use crate::nn::{argmax, MlpModel};
use crate::rng;
use crate::select::{
    clean_objective, greedy_lower, greedy_weight_sum, info_objective, max_utility, utility_features,
    SelectionWarning, Stage,
};

const TAG_DATA: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_LONGTAIL: u64 = 3;
const TAG_NOISE: u64 = 4;
const TAG_INIT: u64 = 5;
const TAG_WARMUP: u64 = 6;
const TAG_SELECT: u64 = 7;
const TAG_REINIT: u64 = 8;
const STREAM_TRAIN: u64 = 9;
/// Open-set outliers sit this many spreads away from every class mean.
const OUTLIER_DISPLACEMENT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    /// Noisy, possibly imbalanced training data.
    pub train: Dataset,
    /// Clean evaluation data.
    pub test: Dataset,
}

/// Builds or loads the data, then applies the long tail and the label noise.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let c = cfg.num_classes;
    let (base, test, spread) = match &cfg.data {
        DataSource::Synthetic {
            kind,
            n_per_class,
            dim,
            spread,
            test_n_per_class,
        } => (
            gen_synthetic(*kind, c, *n_per_class, *dim, *spread, rng::derive(cfg.seed, TAG_DATA))?,
            gen_synthetic(*kind, c, *test_n_per_class, *dim, *spread, rng::derive(cfg.seed, TAG_TEST))?,
            *spread,
        ),
        DataSource::Csv { train, test } => (load_csv(train, c)?, load_csv(test, c)?, 1.0),
    };
    if base.dim() != test.dim() {
        return Err(Error::Dimension {
            expected: base.dim(),
            got: test.dim(),
        });
    }
    let base = if cfg.imbalance_ratio > 1.0 {
        apply_longtail(
            &base,
            ImbalanceSpec {
                ratio: cfg.imbalance_ratio,
            },
            rng::derive(cfg.seed, TAG_LONGTAIL),
        )?
    } else {
        base
    };
    let spec = NoiseSpec {
        kind: cfg.noise_kind,
        rate: cfg.noise_rate,
        pair_map: (cfg.noise_kind == NoiseKind::Asymmetric).then(|| cyclic_pair_map(c)),
        outliers: (cfg.noise_kind == NoiseKind::Openset)
            .then(|| OutlierGenerator::displaced_from(&base, spread, OUTLIER_DISPLACEMENT)),
    };
    let train = inject_noise(&base, &spec, rng::derive(cfg.seed, TAG_NOISE))?;
    Ok(PreparedData { train, test })
}

/// Fraction of samples whose argmax prediction equals the clean label.
pub fn evaluate(model: &MlpModel, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for i in 0..test.len() {
        if argmax(&model.predict(test.x(i))?) == test.hidden_clean_labels()[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

fn by_class(indices: &[usize], observed: &[usize], num_classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); num_classes];
    for &i in indices {
        groups[observed[i]].push(i);
    }
    groups
}

/// Uniform draw of `m` members per observed class of `pool`.
pub fn random_per_class(pool: &[usize], observed: &[usize], num_classes: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut out = Vec::new();
    for (c, mut members) in by_class(pool, observed, num_classes).into_iter().enumerate() {
        members.sort_unstable();
        let mut r = rng::seeded(seed, 0x726e64 + c as u64);
        members.shuffle(&mut r);
        out.extend_from_slice(&members[..m.min(members.len())]);
    }
    out
}

/// The `m` members per observed class with the highest confidence; ties by index.
pub fn most_confident_per_class(
    pool: &[usize],
    observed: &[usize],
    confidence: &[f64],
    num_classes: usize,
    m: usize,
) -> Vec<usize> {
    let mut out = Vec::new();
    for mut members in by_class(pool, observed, num_classes) {
        members.sort_by(|&a, &b| confidence[b].total_cmp(&confidence[a]).then(a.cmp(&b)));
        out.extend_from_slice(&members[..m.min(members.len())]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub validation: Vec<usize>,
    /// Ascending.
    pub training: Vec<usize>,
    /// First-stage set: the informative candidates, or the validation set for one-stage strategies.
    pub stage_one: Vec<usize>,
    pub info_obj: f64,
    pub clean_obj: f64,
    pub warnings: Vec<SelectionWarning>,
}

/// Builds the candidate pool from the pseudo-clean set and picks the validation set.
pub fn select_validation(
    cfg: &ExperimentConfig,
    strategy: Strategy,
    model: &MlpModel,
    ds: &Dataset,
    clean_idx: &[usize],
    robust_labels: &[Vec<f64>],
    seed: u64,
) -> Result<Selection> {
    let c = ds.num_classes();
    let observed = ds.observed_labels();
    let candidates = build_candidate_subset(clean_idx, observed, robust_labels, c, cfg.n_candidates, seed);
    let mut warnings: Vec<SelectionWarning> = candidates
        .empty_classes
        .iter()
        .map(|&class| SelectionWarning {
            stage: Stage::Candidates,
            class,
            available: 0,
            requested: cfg.n_candidates,
        })
        .collect();
    let pool = &candidates.indices;
    let targets: Vec<Vec<f64>> = match cfg.selection_target {
        SelectionTarget::Observed => (0..ds.len()).map(|i| ds.observed_one_hot(i)).collect(),
        SelectionTarget::Robust => robust_labels.to_vec(),
    };
    let feats = utility_features(model, ds, &targets)?;
    let (validation, stage_one) = match strategy {
        Strategy::MaxUtility => {
            let r = max_utility(pool, &feats, cfg.m_val, cfg.k_lower, cfg.clean_similarity)?;
            warnings.extend(r.warnings);
            (r.validation_set, r.lower_set)
        }
        Strategy::InfoOnly => {
            let r = greedy_lower(pool, &feats, cfg.m_val);
            warnings.extend(r.warnings);
            (r.selected.clone(), r.selected)
        }
        Strategy::WeightOnly => {
            let r = greedy_weight_sum(pool, &feats, cfg.m_val);
            warnings.extend(r.warnings);
            (r.selected.clone(), r.selected)
        }
        Strategy::Random => {
            let v = random_per_class(clean_idx, observed, c, cfg.m_val, rng::derive(seed, 1));
            (v.clone(), v)
        }
        Strategy::MostConfident => {
            let confidence = (0..ds.len())
                .map(|i| Ok(model.predict(ds.x(i))?.into_iter().fold(0.0, f64::max)))
                .collect::<Result<Vec<f64>>>()?;
            let v = most_confident_per_class(clean_idx, observed, &confidence, c, cfg.m_val);
            (v.clone(), v)
        }
    };
    let mut in_val = vec![false; ds.len()];
    for &i in &validation {
        in_val[i] = true;
    }
    let training = if cfg.train_on_pseudo_clean {
        let mut t: Vec<usize> = clean_idx.iter().copied().filter(|&i| !in_val[i]).collect();
        t.sort_unstable();
        t
    } else {
        (0..ds.len()).filter(|&i| !in_val[i]).collect()
    };
    Ok(Selection {
        info_obj: info_objective(&stage_one, pool, &feats),
        clean_obj: clean_objective(&validation, pool, &feats, cfg.clean_similarity),
        validation,
        training,
        stage_one,
        warnings,
    })
}

/// Everything the pipeline produces before the main training loop.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub model: MlpModel,
    pub report: WarmupReport,
    pub partition: PartitionResult,
    pub states: Vec<SampleState>,
    pub selection: Selection,
}

/// Warm-up, small-loss partition, robust-label initialisation and the first selection.
pub fn warm_start(cfg: &ExperimentConfig, ds: &Dataset) -> Result<WarmStart> {
    let dims = cfg.layer_dims(ds.dim());
    let init = MlpModel::new(&dims, rng::derive(cfg.seed, TAG_INIT))?;
    let (model, report) = warmup_train(&init, ds, cfg.warmup, rng::derive(cfg.seed, TAG_WARMUP))?;
    let partition = partition_small_loss(&per_sample_losses(&model, ds)?);
    let states = (0..ds.len())
        .map(|i| Ok(SampleState::new(model.predict(ds.x(i))?, cfg.window)))
        .collect::<Result<Vec<_>>>()?;
    let robust: Vec<Vec<f64>> = states.iter().map(|s| s.robust_label.clone()).collect();
    let selection = select_validation(
        cfg,
        cfg.strategy,
        &model,
        ds,
        &partition.clean_idx,
        &robust,
        rng::derive(cfg.seed, TAG_SELECT),
    )?;
    Ok(WarmStart {
        model,
        report,
        partition,
        states,
        selection,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    pub model: MlpModel,
    pub warmup: WarmupReport,
    /// Validation set after the initial selection and after each re-selection.
    pub validation_history: Vec<Vec<usize>>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    run_prepared(cfg, &data)
}

/// [`run_experiment`] for an ablation strategy.
pub fn run_baseline(cfg: &ExperimentConfig) -> Result<RunOutput> {
    if cfg.strategy == Strategy::MaxUtility {
        return Err(Error::config("run_baseline needs a strategy other than max_utility"));
    }
    run_experiment(cfg)
}

#[derive(Default)]
struct OmegaTally {
    clean: (f64, usize),
    noisy: (f64, usize),
}

impl OmegaTally {
    fn means(&self) -> (f64, f64) {
        let mean = |(s, n): (f64, usize)| if n == 0 { 0.0 } else { s / n as f64 };
        (mean(self.clean), mean(self.noisy))
    }
}

fn clean_fraction(indices: &[usize], ds: &Dataset) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    indices.iter().filter(|&&i| ds.is_truly_clean(i)).count() as f64 / indices.len() as f64
}

fn recall(clean_idx: &[usize], ds: &Dataset) -> f64 {
    let total = (0..ds.len()).filter(|&i| ds.is_truly_clean(i)).count();
    if total == 0 {
        return 0.0;
    }
    clean_idx.iter().filter(|&&i| ds.is_truly_clean(i)).count() as f64 / total as f64
}

/// The training loop on already prepared data.
///
/// Hidden clean labels are read only to fill metrics records.
pub fn run_prepared(cfg: &ExperimentConfig, data: &PreparedData) -> Result<RunOutput> {
    cfg.validate()?;
    let ds = &data.train;
    let n = ds.len();
    let warm = warm_start(cfg, ds)?;
    let mut states = warm.states;
    let mut clean_idx = warm.partition.clean_idx;
    let mut selection = warm.selection;
    let mut validation_history = vec![selection.validation.clone()];

    let mut model = MlpModel::new(&cfg.layer_dims(ds.dim()), rng::derive(cfg.seed, TAG_REINIT))?;
    let mut train_rng = rng::seeded(cfg.seed, STREAM_TRAIN);
    let epoch_iters = cfg.epoch_iters(n);
    let interval = cfg.select_interval(n);
    let threshold = cfg.lr_threshold();
    let schedule = cfg.schedule;

    let record = |iter: usize, model: &MlpModel, sel: &Selection, clean_idx: &[usize], tally: &OmegaTally| {
        let (omega_clean_mean, omega_noisy_mean) = tally.means();
        Ok::<_, Error>(MetricsRecord {
            iter,
            test_acc: evaluate(model, &data.test)?,
            val_clean: clean_fraction(&sel.validation, ds),
            dc_precision: clean_fraction(clean_idx, ds),
            dc_recall: recall(clean_idx, ds),
            lr: schedule.lr_at(iter.saturating_sub(1)),
            omega_clean_mean,
            omega_noisy_mean,
            info_obj: sel.info_obj,
            clean_obj: sel.clean_obj,
        })
    };

    let mut tally = OmegaTally::default();
    let mut records = vec![record(0, &model, &selection, &clean_idx, &tally)?];
    let mut order = selection.training.clone();
    order.shuffle(&mut train_rng);
    let mut cursor = 0;
    for t in 0..cfg.total_iters {
        if cursor >= order.len() {
            order.shuffle(&mut train_rng);
            cursor = 0;
        }
        let end = (cursor + cfg.batch_size).min(order.len());
        let batch = MetaBatch::new(order[cursor..end].to_vec(), selection.validation.clone())?;
        cursor = end;
        let (next, report) = meta_train_step(&model, ds, &batch, &schedule, t, &cfg.meta, &mut train_rng)?;
        model = next;
        for (&i, &w) in batch.train_indices().iter().zip(&report.omega) {
            let slot = if ds.is_truly_clean(i) { &mut tally.clean } else { &mut tally.noisy };
            slot.0 += w;
            slot.1 += 1;
        }

        let done = t + 1;
        if done % epoch_iters == 0 {
            for (i, state) in states.iter_mut().enumerate() {
                state.push_prediction(model.predict(ds.x(i))?);
            }
            if done > cfg.robust_start() && schedule.lr_at(t) < threshold {
                for state in &mut states {
                    update_moving_avg(state, cfg.kappa);
                }
            }
        }
        if schedule.is_cycle_end(t) {
            clean_idx = partition_small_loss(&per_sample_losses(&model, ds)?).clean_idx;
        }
        if done % interval == 0 {
            let robust: Vec<Vec<f64>> = states.iter().map(|s| s.robust_label.clone()).collect();
            selection = select_validation(
                cfg,
                cfg.strategy,
                &model,
                ds,
                &clean_idx,
                &robust,
                rng::derive(rng::derive(cfg.seed, TAG_SELECT), done as u64),
            )?;
            validation_history.push(selection.validation.clone());
            order = selection.training.clone();
            order.shuffle(&mut train_rng);
            cursor = 0;
        }
        if done % interval == 0 || done == cfg.total_iters {
            records.push(record(done, &model, &selection, &clean_idx, &tally)?);
            tally = OmegaTally::default();
        }
    }
    Ok(RunOutput {
        records,
        model,
        warmup: warm.report,
        validation_history,
    })
}
