//! Feature extraction, normalization, labeling and dataset generation.

mod io;

pub use io::{load_dataset, save_dataset, DatasetFormat};

use crate::backhaul::BackhaulState;
use crate::channel::{secondary_power, secrecy_rates, solve_power, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::selection::{select_optimal, Selection};
use crate::sim::{map_chunks, Draw};

/// Rows per transmitter column: `|h_SkD|`, `|h_SkE|`, `|h_TE|`, `|h_TD|`.
pub const ROWS: usize = 4;

/// A 4×K matrix stored column by column, so the flat slice is the feature
/// vector and each column is one LSTM time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    k: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_flat(k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ROWS * k {
            return Err(Error::ShapeMismatch {
                expected: ROWS * k,
                got: data.len(),
            });
        }
        Ok(Self { k, data })
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            data: vec![0.0; ROWS * k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Entries in flattening order: column 1 rows 1-4, then column 2, ...
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entry at `row` (0..4) of transmitter column `col` (0..K).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * ROWS + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * ROWS..(col + 1) * ROWS]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// A normalized feature matrix with its label in `1..=K+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: FeatureMatrix,
    pub label: usize,
}

/// Everything needed to regenerate a dataset bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub config: SystemConfig,
    pub seed: u64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn k(&self) -> usize {
        self.meta.config.k
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn features(&self) -> Vec<FeatureMatrix> {
        self.samples.iter().map(|s| s.features.clone()).collect()
    }

    /// Label counts indexed by `label - 1`.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.k() + 1];
        for s in &self.samples {
            hist[s.label - 1] += 1;
        }
        hist
    }
}

/// Raw CSI magnitudes; columns of transmitters without backhaul are zero.
pub fn build_feature_matrix(real: &ChannelRealization, bh: &BackhaulState) -> FeatureMatrix {
    let k = real.k();
    assert_eq!(k, bh.k(), "realization and backhaul disagree on K");
    let mut data = Vec::with_capacity(ROWS * k);
    for col in 0..k {
        if bh.is_active(col) {
            data.extend([
                real.h_sd[col].norm(),
                real.h_se[col].norm(),
                real.h_te.norm(),
                real.h_td.norm(),
            ]);
        } else {
            data.extend([0.0; ROWS]);
        }
    }
    FeatureMatrix { k, data }
}

/// `t_i = (d_i - mean(d)) / (max(d) - min(d))` over the flattened matrix.
pub fn try_normalize(raw: &FeatureMatrix) -> Result<FeatureMatrix> {
    let d = &raw.data;
    let (lo, hi) = d
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    if range <= 0.0 || d.is_empty() {
        return Err(Error::ConstantVector);
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    Ok(FeatureMatrix {
        k: raw.k,
        data: d.iter().map(|&x| (x - mean) / range).collect(),
    })
}

/// [`try_normalize`], mapping a constant vector to all zeros.
pub fn normalize(raw: &FeatureMatrix) -> FeatureMatrix {
    try_normalize(raw).unwrap_or_else(|_| FeatureMatrix::zeros(raw.k))
}

/// Label of a realization given per-transmitter secrecy rates: the index of
/// the best active transmitter, or `K + 1` when no backhaul is up.
pub fn label_from_rates(rates: &[f64], bh: &BackhaulState) -> usize {
    match select_optimal(rates, bh).selected {
        Selection::Transmitter(k) => k,
        Selection::NoActiveTransmitter => rates.len() + 1,
    }
}

/// Labels one realization, solving power control from `cfg`. An infeasible
/// constraint labels with `P_S = 0`.
pub fn label_sample(real: &ChannelRealization, bh: &BackhaulState, cfg: &SystemConfig) -> usize {
    let p_s = solve_power(cfg).p_s;
    label_from_rates(&secrecy_rates(cfg, p_s, real), bh)
}

pub(crate) fn labeled_sample(cfg: &SystemConfig, p_s: f64, draw: &Draw) -> LabeledSample {
    let rates = secrecy_rates(cfg, p_s, &draw.channels);
    LabeledSample {
        features: normalize(&build_feature_matrix(&draw.channels, &draw.backhaul)),
        label: label_from_rates(&rates, &draw.backhaul),
    }
}

/// `m` labeled samples from the draw stream of `seed`.
///
/// The stream is the one used by [`crate::selection::sop_direct`] and
/// [`crate::selection::policy_sop`], so a dataset and an SOP evaluation with
/// the same seed see the same realizations.
pub fn generate_dataset(cfg: &SystemConfig, m: usize, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let p_s = secondary_power(cfg)?;
    let samples = map_chunks(cfg, m, seed, |draws| {
        draws.iter().map(|d| labeled_sample(cfg, p_s, d)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    Ok(Dataset {
        meta: DatasetMeta {
            config: cfg.clone(),
            seed,
            m,
        },
        samples,
    })
}
