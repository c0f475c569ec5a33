//! Gaussian naive Bayes.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    pub(crate) means: Array2<f64>,
    pub(crate) vars: Array2<f64>,
    /// `None` for classes absent from the training data; they are never predicted.
    pub(crate) log_priors: Vec<Option<f64>>,
}

impl GaussianNb {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize) -> Self {
        let d = x.ncols();
        let mut means = Array2::zeros((n_classes, d));
        let mut vars = Array2::from_elem((n_classes, d), VARIANCE_FLOOR);
        let mut counts = vec![0usize; n_classes];
        for (row, &c) in x.axis_iter(Axis(0)).zip(y) {
            counts[c] += 1;
            let mut m = means.row_mut(c);
            m += &row;
        }
        for (c, &n) in counts.iter().enumerate() {
            if n > 0 {
                let mut m = means.row_mut(c);
                m /= n as f64;
            }
        }
        let mut sq = Array2::<f64>::zeros((n_classes, d));
        for (row, &c) in x.axis_iter(Axis(0)).zip(y) {
            let diff = &row - &means.row(c);
            let mut s = sq.row_mut(c);
            s += &diff.mapv(|v| v * v);
        }
        for (c, &n) in counts.iter().enumerate() {
            if n > 0 {
                let v = sq.row(c).mapv(|s| (s / n as f64).max(VARIANCE_FLOOR));
                vars.row_mut(c).assign(&v);
            }
        }
        let total = y.len() as f64;
        let log_priors = counts
            .iter()
            .map(|&n| (n > 0).then(|| (n as f64 / total).ln()))
            .collect();
        Self { means, vars, log_priors }
    }

    /// Classes that had no training samples.
    pub fn absent_classes(&self) -> Vec<usize> {
        (0..self.log_priors.len()).filter(|&c| self.log_priors[c].is_none()).collect()
    }

    pub fn log_joint(&self, q: ArrayView1<f64>, class: usize) -> Option<f64> {
        let lp = self.log_priors[class]?;
        let ll: f64 = q
            .iter()
            .zip(self.means.row(class))
            .zip(self.vars.row(class))
            .map(|((x, m), v)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
            .sum();
        Some(lp + ll)
    }

    pub fn predict_row(&self, q: ArrayView1<f64>) -> usize {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for c in 0..self.log_priors.len() {
            if let Some(s) = self.log_joint(q, c) {
                if s > best.0 || best.1 == usize::MAX {
                    best = (s, c);
                }
            }
        }
        best.1
    }
}
