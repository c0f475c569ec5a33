//! Central finite-difference check of the analytic gradients.

use rand::seq::index::sample;
use rand::Rng;

use super::params::{Block, BlockKind};
use super::{design_matrix, Differentiable, Lstm, Mlp, ModelKind, TrainConfig};
use crate::dataset::{FeatureMatrix, LabeledSample, ROWS};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng, TAG_GRADCHECK};

/// Coordinates checked for the LSTM (all of them for the MLP).
pub const LSTM_CHECK_SAMPLE: usize = 1000;

/// Denominator floor of the relative error. A central difference with step
/// `1e-5` on an O(1) loss carries about `1e-11` of rounding noise, so
/// derivatives much smaller than this floor cannot be resolved.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub kind: ModelKind,
    /// Coordinates compared.
    pub checked: usize,
    /// Parameter count of the model.
    pub total: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Flat index of the worst coordinate and the block it belongs to.
    pub worst_index: usize,
    pub worst_block: &'static str,
    pub analytic: f64,
    pub numeric: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

/// Compares backpropagated gradients against `(L(θ+h) - L(θ-h)) / 2h`.
///
/// The model is freshly initialised from `tc.seed`, with small random
/// biases and peepholes so that every parameter block carries gradient.
pub fn gradient_check(
    kind: ModelKind,
    batch: &[LabeledSample],
    step: f64,
    tolerance: f64,
    tc: &TrainConfig,
) -> Result<GradCheckReport> {
    if !kind.is_differentiable() {
        return Err(Error::NonDifferentiableVariant(kind.name().to_string()));
    }
    let first = batch.first().ok_or(Error::EmptyDataset)?;
    let k = first.features.k();
    let mut y = Vec::with_capacity(batch.len());
    for s in batch {
        if s.features.k() != k {
            return Err(Error::KMismatch {
                model: k,
                data: s.features.k(),
            });
        }
        if !(1..=k + 1).contains(&s.label) {
            return Err(Error::InvalidLabel { label: s.label, max: k + 1 });
        }
        y.push(s.label - 1);
    }
    let xs: Vec<FeatureMatrix> = batch.iter().map(|s| s.features.clone()).collect();
    let x = design_matrix(&xs);
    let mut rng = rng_from_seed(derive_seed(tc.seed, 0, TAG_GRADCHECK));
    match kind {
        ModelKind::Mlp => {
            let mut m = Mlp::new(ROWS * k, tc.mlp_hidden, k + 1, &mut rng);
            jitter(&mut m, &mut rng);
            let all: Vec<usize> = (0..m.params().len()).collect();
            Ok(check(kind, &mut m, &x, &y, &all, step, tolerance))
        }
        _ => {
            let mut m = Lstm::new(k, tc.lstm_hidden, k + 1, &mut rng);
            jitter(&mut m, &mut rng);
            let total = m.params().len();
            let mut idx = sample(&mut rng, total, LSTM_CHECK_SAMPLE.min(total)).into_vec();
            idx.sort_unstable();
            Ok(check(kind, &mut m, &x, &y, &idx, step, tolerance))
        }
    }
}

fn jitter<M: Differentiable>(m: &mut M, rng: &mut SimRng) {
    let blocks: Vec<Block> = m.blocks().to_vec();
    let p = m.params_mut();
    for b in blocks {
        if !matches!(b.kind, BlockKind::Weight { .. }) {
            for v in &mut p[b.range()] {
                *v = rng.random_range(-0.1..0.1);
            }
        }
    }
}

fn check<M: Differentiable>(
    kind: ModelKind,
    m: &mut M,
    x: &ndarray::Array2<f64>,
    y: &[usize],
    coords: &[usize],
    step: f64,
    tolerance: f64,
) -> GradCheckReport {
    let total = m.params().len();
    let mut grad = vec![0.0; total];
    m.loss_and_grad(x.view(), y, &mut grad);
    let mut report = GradCheckReport {
        kind,
        checked: coords.len(),
        total,
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst_index: 0,
        worst_block: "",
        analytic: 0.0,
        numeric: 0.0,
        tolerance,
    };
    for &i in coords {
        let orig = m.params()[i];
        m.params_mut()[i] = orig + step;
        let up = m.loss(x.view(), y);
        m.params_mut()[i] = orig - step;
        let down = m.loss(x.view(), y);
        m.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * step);
        let err = relative_error(grad[i], numeric);
        report.max_abs_error = report.max_abs_error.max((grad[i] - numeric).abs());
        if err > report.max_rel_error || report.worst_block.is_empty() {
            report.max_rel_error = err;
            report.worst_index = i;
            report.analytic = grad[i];
            report.numeric = numeric;
            report.worst_block = m.blocks().iter().find(|b| b.range().contains(&i)).map_or("", |b| b.name);
        }
    }
    report
}
