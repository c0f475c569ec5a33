//! Confusion matrices and per-class misclassification rates.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::TrainedModel;
use crate::selection::PolicySop;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub k: usize,
    /// `confusion[t][p]` counts samples with true label `t + 1` predicted as `p + 1`.
    pub confusion: Vec<Vec<usize>>,
    /// Misclassification rate per true label; `None` when the label never occurs.
    pub class_rates: Vec<Option<f64>>,
    pub overall: f64,
    /// Secrecy outage of the model next to conventional selection, when evaluated.
    pub sop: Option<PolicySop>,
}

impl MetricsReport {
    pub fn from_predictions(k: usize, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if truth.len() != predicted.len() {
            return Err(Error::ShapeMismatch {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let n = k + 1;
        let mut confusion = vec![vec![0usize; n]; n];
        for (&t, &p) in truth.iter().zip(predicted) {
            for label in [t, p] {
                if !(1..=n).contains(&label) {
                    return Err(Error::InvalidLabel { label, max: n });
                }
            }
            confusion[t - 1][p - 1] += 1;
        }
        let class_rates = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let total: usize = row.iter().sum();
                (total > 0).then(|| (total - row[c]) as f64 / total as f64)
            })
            .collect();
        let wrong: usize = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| row.iter().sum::<usize>() - row[c])
            .sum();
        Ok(Self {
            k,
            confusion,
            class_rates,
            overall: wrong as f64 / truth.len() as f64,
            sop: None,
        })
    }

    /// Test samples per true label.
    pub fn class_counts(&self) -> Vec<usize> {
        self.confusion.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn samples(&self) -> usize {
        self.class_counts().iter().sum()
    }

    pub fn class_errors(&self) -> Vec<usize> {
        self.confusion
            .iter()
            .enumerate()
            .map(|(c, row)| row.iter().sum::<usize>() - row[c])
            .collect()
    }

    /// Binomial standard error of the overall ratio.
    pub fn overall_std_err(&self) -> f64 {
        let p = self.overall;
        (p * (1.0 - p) / self.samples() as f64).sqrt()
    }

    pub fn class_std_err(&self, class: usize) -> Option<f64> {
        let n = self.class_counts()[class];
        self.class_rates[class].map(|p| (p * (1.0 - p) / n as f64).sqrt())
    }
}

/// Scores `model` against the labels of `test`.
pub fn misclassification_report(model: &TrainedModel, test: &Dataset) -> Result<MetricsReport> {
    model.check_k(test.k())?;
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted = model.predict_batch(&test.features());
    MetricsReport::from_predictions(test.k(), &test.labels(), &predicted)
}
