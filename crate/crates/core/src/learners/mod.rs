//! The five selection classifiers behind one training and prediction contract.
//!
//! Labels on the public surface are transmitter labels `1..=K+1`; internally
//! every model works with class indices `0..=K`.

mod adam;
mod gnb;
mod gradcheck;
mod knn;
mod lstm;
mod mlp;
mod params;
mod persist;
mod svm;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix, LabeledSample, ROWS};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, TAG_INIT, TAG_SHUFFLE};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gnb::{GaussianNb, VARIANCE_FLOOR};
pub use gradcheck::{gradient_check, relative_error, GradCheckReport, LSTM_CHECK_SAMPLE, REL_FLOOR};
pub use knn::Knn;
pub use lstm::{Lstm, STEP_INPUTS};
pub use mlp::Mlp;
pub use params::{softmax_rows, Block};
pub use persist::{load_model, read_model, save_model, write_model};
pub use svm::{rbf_matrix, smo, BinarySolution, SmoConfig, Svm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Knn,
    Gnb,
    Svm,
    Mlp,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Lstm, ModelKind::Mlp, ModelKind::Svm, ModelKind::Knn, ModelKind::Gnb];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::Gnb => "gnb",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
            ModelKind::Lstm => "lstm",
        }
    }

    pub fn is_differentiable(self) -> bool {
        matches!(self, ModelKind::Mlp | ModelKind::Lstm)
    }

    fn tag(self) -> u8 {
        match self {
            ModelKind::Knn => 0,
            ModelKind::Gnb => 1,
            ModelKind::Svm => 2,
            ModelKind::Mlp => 3,
            ModelKind::Lstm => 4,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" | "k-nn" => Ok(ModelKind::Knn),
            "gnb" | "nb" => Ok(ModelKind::Gnb),
            "svm" => Ok(ModelKind::Svm),
            "mlp" | "dnn" => Ok(ModelKind::Mlp),
            "lstm" => Ok(ModelKind::Lstm),
            _ => Err(Error::UnknownScheme(s.to_string())),
        }
    }
}

/// Training hyperparameters for every model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub knn_k: usize,
    /// RBF width; `None` means `1 / (4K)`.
    pub svm_gamma: Option<f64>,
    pub svm_c: f64,
    /// At most this many leading training samples are used by the SVM.
    pub svm_subsample: usize,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
    pub mlp_hidden: [usize; 2],
    pub lstm_hidden: usize,
    /// Evaluate the loss on the whole training set after every epoch.
    pub track_full_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 20,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            knn_k: 5,
            svm_gamma: None,
            svm_c: 1.0,
            svm_subsample: 5000,
            svm_tol: 1e-3,
            svm_max_passes: 10,
            mlp_hidden: [256, 128],
            lstm_hidden: 100,
            track_full_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.learning_rate) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !pos(self.epsilon) {
            return bad("Adam needs beta1, beta2 in [0, 1) and epsilon > 0");
        }
        if self.knn_k == 0 {
            return bad("knn_k must be at least 1");
        }
        if self.svm_gamma.is_some_and(|g| !pos(g)) || !pos(self.svm_c) || !pos(self.svm_tol) {
            return bad("svm_gamma, svm_c and svm_tol must be positive");
        }
        if self.svm_subsample == 0 || self.svm_max_passes == 0 {
            return bad("svm_subsample and svm_max_passes must be at least 1");
        }
        if self.mlp_hidden.contains(&0) || self.lstm_hidden == 0 {
            return bad("hidden layer sizes must be at least 1");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    /// RBF width for `k` transmitters.
    pub fn svm_gamma_for(&self, k: usize) -> f64 {
        self.svm_gamma.unwrap_or(1.0 / (ROWS * k) as f64)
    }
}

/// A model trained by gradient descent on a flat parameter vector.
pub(crate) trait Differentiable {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn blocks(&self) -> &[Block];
    /// Mean cross-entropy over the rows of `x`.
    fn loss(&self, x: ArrayView2<f64>, y: &[usize]) -> f64;
    /// Same loss; writes its gradient into `grad`.
    fn loss_and_grad(&self, x: ArrayView2<f64>, y: &[usize], grad: &mut [f64]) -> f64;
}

/// What happened during training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean minibatch loss per epoch (neural models only).
    pub epoch_loss: Vec<f64>,
    /// Full training-set loss after each epoch, when tracking is enabled.
    pub full_loss: Vec<f64>,
    /// Samples actually used for fitting.
    pub train_size: usize,
    /// False when an SVM binary problem ran out of passes.
    pub converged: bool,
}

fn fit_gradient<M: Differentiable>(
    model: &mut M,
    x: &Array2<f64>,
    y: &[usize],
    tc: &TrainConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let adam_cfg = tc.adam();
    let mut state = AdamState::new(model.params().len());
    let mut grad = vec![0.0; model.params().len()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(tc.seed, 0, TAG_SHUFFLE));
    let mut epoch_loss = Vec::with_capacity(tc.epochs);
    let mut full_loss = Vec::new();
    let mut yb = Vec::with_capacity(tc.batch_size);
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let xb = x.select(ndarray::Axis(0), batch);
            yb.clear();
            yb.extend(batch.iter().map(|&i| y[i]));
            let loss = model.loss_and_grad(xb.view(), &yb, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergedLoss { epoch });
            }
            adam_step(model.params_mut(), &grad, &mut state, &adam_cfg)?;
            total += loss * batch.len() as f64;
        }
        epoch_loss.push(total / n as f64);
        if tc.track_full_loss {
            let loss = model.loss(x.view(), y);
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch });
            }
            full_loss.push(loss);
        }
    }
    Ok((epoch_loss, full_loss))
}

/// One sample per row, features in the feature matrix's column-major order.
pub fn design_matrix(xs: &[FeatureMatrix]) -> Array2<f64> {
    let d = xs.first().map_or(0, |x| x.as_slice().len());
    let mut flat = Vec::with_capacity(xs.len() * d);
    for x in xs {
        flat.extend_from_slice(x.as_slice());
    }
    Array2::from_shape_vec((xs.len(), d), flat).expect("feature matrices of equal size")
}

/// The fitted parameters of one variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(Knn),
    Gnb(GaussianNb),
    Svm(Svm),
    Mlp(Mlp),
    Lstm(Lstm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    k: usize,
    config: TrainConfig,
    model: Model,
}

/// Rows per prediction work unit.
const PREDICT_CHUNK: usize = 1024;

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            Model::Knn(_) => ModelKind::Knn,
            Model::Gnb(_) => ModelKind::Gnb,
            Model::Svm(_) => ModelKind::Svm,
            Model::Mlp(_) => ModelKind::Mlp,
            Model::Lstm(_) => ModelKind::Lstm,
        }
    }

    /// Number of secondary transmitters the model was trained for.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_classes(&self) -> usize {
        self.k + 1
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn check_k(&self, k: usize) -> Result<()> {
        if k != self.k {
            return Err(Error::KMismatch { model: self.k, data: k });
        }
        Ok(())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> usize {
        self.predict_batch(std::slice::from_ref(x))[0]
    }

    /// Labels in `1..=K+1`, one per input.
    ///
    /// Panics if an input was built for a different `K`; use [`check_k`](Self::check_k) first.
    pub fn predict_batch(&self, xs: &[FeatureMatrix]) -> Vec<usize> {
        for x in xs {
            assert_eq!(x.k(), self.k, "feature matrix K does not match the model");
        }
        xs.par_chunks(PREDICT_CHUNK)
            .map(|chunk| self.predict_rows(design_matrix(chunk).view()))
            .collect::<Vec<_>>()
            .concat()
    }

    /// Class indices `0..=K` for rows of a design matrix, shifted to labels.
    fn predict_rows(&self, x: ArrayView2<f64>) -> Vec<usize> {
        let classes: Vec<usize> = match &self.model {
            Model::Knn(m) => x.rows().into_iter().map(|r| m.predict_row(r)).collect(),
            Model::Gnb(m) => x.rows().into_iter().map(|r| m.predict_row(r)).collect(),
            Model::Svm(m) => m.predict(x),
            Model::Mlp(m) => argmax_rows(&m.probabilities(x)),
            Model::Lstm(m) => argmax_rows(&m.probabilities(x)),
        };
        classes.into_iter().map(|c| c + 1).collect()
    }

    /// Softmax outputs of the neural models; `None` for the others.
    pub fn probabilities(&self, xs: &[FeatureMatrix]) -> Option<Array2<f64>> {
        let x = design_matrix(xs);
        match &self.model {
            Model::Mlp(m) => Some(m.probabilities(x.view())),
            Model::Lstm(m) => Some(m.probabilities(x.view())),
            _ => None,
        }
    }
}

/// First maximal entry per row; rows without a comparable entry give 0.
fn argmax_rows(p: &Array2<f64>) -> Vec<usize> {
    p.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (i, &v) in r.iter().enumerate() {
                if v > r[best] || r[best].is_nan() && !v.is_nan() {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Trains `kind` on a generated dataset.
pub fn train(kind: ModelKind, ds: &Dataset, tc: &TrainConfig) -> Result<(TrainedModel, TrainReport)> {
    train_on(kind, ds.k(), &ds.samples, tc)
}

/// Trains `kind` on labeled samples built for `k` transmitters.
pub fn train_on(
    kind: ModelKind,
    k: usize,
    samples: &[LabeledSample],
    tc: &TrainConfig,
) -> Result<(TrainedModel, TrainReport)> {
    tc.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_classes = k + 1;
    let mut y = Vec::with_capacity(samples.len());
    for s in samples {
        if s.features.k() != k {
            return Err(Error::KMismatch {
                model: k,
                data: s.features.k(),
            });
        }
        if !(1..=n_classes).contains(&s.label) {
            return Err(Error::InvalidLabel {
                label: s.label,
                max: n_classes,
            });
        }
        y.push(s.label - 1);
    }
    let xs: Vec<FeatureMatrix> = samples.iter().map(|s| s.features.clone()).collect();
    let x = design_matrix(&xs);
    drop(xs);
    let mut report = TrainReport {
        train_size: y.len(),
        converged: true,
        ..Default::default()
    };
    let mut init_rng = rng_from_seed(derive_seed(tc.seed, 0, TAG_INIT));
    let model = match kind {
        ModelKind::Knn => Model::Knn(Knn::fit(x.view(), &y, n_classes, tc.knn_k)),
        ModelKind::Gnb => Model::Gnb(GaussianNb::fit(x.view(), &y, n_classes)),
        ModelKind::Svm => {
            let n = y.len().min(tc.svm_subsample);
            let cfg = SmoConfig {
                gamma: tc.svm_gamma_for(k),
                c: tc.svm_c,
                tol: tc.svm_tol,
                max_passes: tc.svm_max_passes,
            };
            let m = Svm::fit(x.slice(ndarray::s![..n, ..]), &y[..n], n_classes, &cfg);
            report.train_size = n;
            report.converged = m.all_converged();
            Model::Svm(m)
        }
        ModelKind::Mlp => {
            let mut m = Mlp::new(ROWS * k, tc.mlp_hidden, n_classes, &mut init_rng);
            (report.epoch_loss, report.full_loss) = fit_gradient(&mut m, &x, &y, tc)?;
            Model::Mlp(m)
        }
        ModelKind::Lstm => {
            let mut m = Lstm::new(k, tc.lstm_hidden, n_classes, &mut init_rng);
            (report.epoch_loss, report.full_loss) = fit_gradient(&mut m, &x, &y, tc)?;
            Model::Lstm(m)
        }
    };
    Ok((
        TrainedModel {
            k,
            config: tc.clone(),
            model,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::dataset::generate_dataset;

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            mlp_hidden: [16, 8],
            lstm_hidden: 8,
            svm_subsample: 200,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(ModelKind::from_tag(k.tag()), Some(k));
        }
        assert_eq!("DNN".parse::<ModelKind>().unwrap(), ModelKind::Mlp);
        assert!(matches!("rf".parse::<ModelKind>(), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn config_defaults_and_validation() {
        let tc = TrainConfig::default();
        tc.validate().unwrap();
        assert_eq!(tc.svm_gamma_for(4), 1.0 / 16.0);
        for broken in [
            TrainConfig { epochs: 0, ..tc.clone() },
            TrainConfig { learning_rate: -1.0, ..tc.clone() },
            TrainConfig { batch_size: 0, ..tc.clone() },
            TrainConfig { svm_gamma: Some(0.0), ..tc.clone() },
            TrainConfig { beta2: 1.0, ..tc.clone() },
        ] {
            assert!(broken.validate().is_err());
        }
    }

    #[test]
    fn every_kind_trains_and_predicts_valid_labels() {
        let cfg = SystemConfig::iid(3, 0.7, 8.0);
        let ds = generate_dataset(&cfg, 400, 5).unwrap();
        let tc = small_config();
        let wild: Vec<FeatureMatrix> = [0.0, 1e6, -1e6, 1e300]
            .iter()
            .map(|&v| FeatureMatrix::from_flat(3, vec![v; 12]).unwrap())
            .collect();
        for kind in ModelKind::ALL {
            let (m, report) = train(kind, &ds, &tc).unwrap();
            assert_eq!(m.kind(), kind);
            assert!(report.train_size > 0);
            let preds = m.predict_batch(&ds.features());
            assert_eq!(preds.len(), ds.len());
            for p in preds.iter().chain(&m.predict_batch(&wild)) {
                assert!((1..=4).contains(p), "{kind}: {p}");
            }
        }
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let tc = small_config();
        for kind in ModelKind::ALL {
            assert!(matches!(train_on(kind, 2, &[], &tc), Err(Error::EmptyDataset)));
        }
        let s = LabeledSample {
            features: FeatureMatrix::zeros(2),
            label: 4,
        };
        assert!(matches!(
            train_on(ModelKind::Gnb, 2, std::slice::from_ref(&s), &tc),
            Err(Error::InvalidLabel { label: 4, max: 3 })
        ));
        assert!(matches!(
            train_on(ModelKind::Gnb, 3, &[s], &tc),
            Err(Error::KMismatch { model: 3, data: 2 })
        ));
    }

    #[test]
    fn neural_training_is_deterministic() {
        let cfg = SystemConfig::iid(3, 0.8, 8.0);
        let ds = generate_dataset(&cfg, 300, 6).unwrap();
        let tc = small_config();
        for kind in [ModelKind::Mlp, ModelKind::Lstm] {
            let (a, ra) = train(kind, &ds, &tc).unwrap();
            let (b, rb) = train(kind, &ds, &tc).unwrap();
            assert_eq!(a, b);
            assert_eq!(ra, rb);
            let (c, _) = train(kind, &ds, &TrainConfig { seed: 12, ..tc.clone() }).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let cfg = SystemConfig::iid(2, 0.8, 8.0);
        let mut ds = generate_dataset(&cfg, 200, 7).unwrap();
        for s in &mut ds.samples {
            let v: Vec<f64> = s.features.as_slice().iter().map(|v| v * 1e200).collect();
            s.features = FeatureMatrix::from_flat(2, v).unwrap();
        }
        let tc = TrainConfig {
            learning_rate: 1e300,
            ..small_config()
        };
        assert!(matches!(train(ModelKind::Mlp, &ds, &tc), Err(Error::DivergedLoss { .. })));
    }
}
