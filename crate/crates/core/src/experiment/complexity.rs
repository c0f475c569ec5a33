//! Operation counts and feedback volume of the selection schemes.

use std::fmt;
use std::str::FromStr;

use crate::dataset::ROWS;
use crate::error::{Error, Result};
use crate::learners::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Exhaustive search over active transmitters with full CSI.
    Conventional,
    Learned(ModelKind),
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conventional" | "optimal" => Ok(Scheme::Conventional),
            _ => s.parse().map(Scheme::Learned),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Conventional => f.write_str("conventional"),
            Scheme::Learned(k) => write!(f, "{k}"),
        }
    }
}

/// Network sizes entering the operation counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityParams {
    pub k: u64,
    /// LSTM memory cells, inputs per step and outputs.
    pub n_c: u64,
    pub n_i: u64,
    pub n_o: u64,
    /// MLP hidden layer widths.
    pub l1: u64,
    pub l2: u64,
}

impl ComplexityParams {
    /// Defaults of the trained models for `k` transmitters.
    pub fn for_k(k: u64) -> Self {
        Self {
            k,
            n_c: 100,
            n_i: ROWS as u64,
            n_o: k + 1,
            l1: 256,
            l2: 128,
        }
    }
}

/// LSTM weights without biases: `4n_c² + 4n_i·n_c + n_c·n_o + 3n_c`.
pub fn lstm_weight_count(n_c: u64, n_i: u64, n_o: u64) -> u64 {
    4 * n_c * n_c + 4 * n_i * n_c + n_c * n_o + 3 * n_c
}

/// Leading-order operation count of one selection, with `N = 4K` inputs.
pub fn complexity_estimate(scheme: Scheme, p: &ComplexityParams) -> Result<u64> {
    if [p.k, p.n_c, p.n_i, p.n_o, p.l1, p.l2].contains(&0) {
        return Err(Error::InvalidConfig("complexity arguments must be positive".into()));
    }
    let n = ROWS as u64 * p.k;
    Ok(match scheme {
        Scheme::Conventional => p.k,
        Scheme::Learned(ModelKind::Lstm) => p.k * lstm_weight_count(p.n_c, p.n_i, p.n_o),
        Scheme::Learned(ModelKind::Mlp) => n * p.l1 + p.l1 * p.l2 + p.l2 * p.k,
        Scheme::Learned(ModelKind::Svm) => n * n,
        Scheme::Learned(ModelKind::Knn) => n,
        Scheme::Learned(ModelKind::Gnb) => (p.k + 1) * n + p.k,
    })
}

/// Real values fed back per selection: both parts of every complex
/// coefficient for conventional selection, magnitudes only for learners.
pub fn feedback_overhead(scheme: Scheme, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let coefficients = ROWS as u64 * k;
    Ok(match scheme {
        Scheme::Conventional => 2 * coefficients,
        Scheme::Learned(_) => coefficients,
    })
}
