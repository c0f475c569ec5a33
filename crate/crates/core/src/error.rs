use thiserror::Error;

/// Errors raised by the simulator, the dataset pipeline and the learners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The primary link is already in outage more often than `phi` without
    /// any secondary interference. Callers that sweep continue with `P_S = 0`.
    #[error("primary outage constraint infeasible: zero-interference outage {baseline_outage:.6} exceeds phi = {phi}")]
    InfeasiblePrimaryConstraint { baseline_outage: f64, phi: f64 },

    #[error("SINR denominator is zero")]
    DegenerateDenominator,

    #[error("subset decomposition supports K <= {max}, got K = {k}")]
    SubsetBudgetExceeded { k: usize, max: usize },

    #[error("cannot normalize a constant feature vector")]
    ConstantVector,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training loss became non-finite in epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("model variant `{0}` has no analytic gradient")]
    NonDifferentiableVariant(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("K mismatch: model expects K = {model}, data has K = {data}")]
    KMismatch { model: usize, data: usize },

    #[error("label {label} outside 1..={max}")]
    InvalidLabel { label: usize, max: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
