//! Experiment orchestration: configuration files, metrics, cost estimates
//! and CSV tables.

mod complexity;
mod config;
mod metrics;
mod output;
mod runs;

pub use complexity::{complexity_estimate, feedback_overhead, lstm_weight_count, ComplexityParams, Scheme};
pub use config::ExperimentConfig;
pub use metrics::{misclassification_report, MetricsReport};
pub use output::{fmt_f64, fmt_opt, CsvSink};
pub use runs::{
    eval_seed, model_seed, run_misclass_study, run_power_check, run_sop_sweep, test_data_seed, train_data_seed,
    train_models, MisclassRow, PowerRow, SopRow, STUDY_INDEX,
};
