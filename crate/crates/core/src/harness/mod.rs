//! Experiment orchestration: configuration, the training loop, selection
//! baselines, evaluation and metrics files.

mod config;
mod metrics;
mod run;

pub use config::{DataSource, ExperimentConfig, SelectionTarget, Strategy};
pub use metrics::{csv_path_for, emit_metrics, read_csv, read_jsonl, MetricsRecord};
pub use run::{
    evaluate, most_confident_per_class, prepare_data, random_per_class, run_baseline, run_experiment, run_prepared,
    select_validation, warm_start, PreparedData, RunOutput, Selection, WarmStart,
};
