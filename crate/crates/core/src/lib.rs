//! Secrecy-oriented transmitter selection in an underlay cognitive small-cell
//! network with unreliable wireless backhaul.
//!
//! The crate simulates Rayleigh-faded secondary and primary links, solves the
//! primary outage power constraint, selects transmitters by exhaustive search
//! and estimates the secrecy outage probability (SOP). On top of that it turns
//! realizations into normalized 4×K feature matrices and trains five
//! classifiers (k-NN, Gaussian naive Bayes, RBF-SVM, MLP and a peephole LSTM)
//! to predict the selection from CSI magnitudes alone.

pub mod backhaul;
pub mod channel;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod rng;
pub mod selection;
pub mod sim;

pub use backhaul::{active_set_probability, sample_backhaul, ActiveSet, BackhaulState};
pub use channel::{
    sample_channels, secondary_power, secrecy_rate, sinr, solve_power, ChannelRealization,
    PowerControl,
};
pub use config::{db_to_linear, SystemConfig};
pub use dataset::{
    build_feature_matrix, generate_dataset, label_sample, load_dataset, normalize, save_dataset,
    Dataset, FeatureMatrix, LabeledSample,
};
pub use error::{Error, Result};
pub use experiment::{
    complexity_estimate, feedback_overhead, misclassification_report, ExperimentConfig,
    MetricsReport, Scheme,
};
pub use learners::{gradient_check, train, ModelKind, TrainConfig, TrainedModel};
pub use selection::{
    policy_sop, select_optimal, sop_decomposed, sop_direct, PolicySop, Selection,
    SelectionOutcome, SopEstimate,
};
