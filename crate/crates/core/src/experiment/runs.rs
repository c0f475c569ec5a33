//! Sweeps and studies built from the simulation and learner modules.
//!
//! Seeds are derived from the master seed, the operating-point index and a
//! purpose tag, so a point's results do not depend on the other points.

use crate::channel::{baseline_primary_outage, primary_outage, primary_outage_monte_carlo, solve_power};
use crate::dataset::{generate_dataset, Dataset};
use crate::error::Result;
use crate::learners::{train, ModelKind, TrainReport, TrainedModel};
use crate::rng::{derive_seed, TAG_EVAL, TAG_MODEL, TAG_POWER, TAG_TEST_DATA, TAG_TRAIN_DATA};
use crate::selection::{policy_sop, sop_direct};

use super::metrics::{misclassification_report, MetricsReport};
use super::output::{fmt_f64, fmt_opt};
use super::ExperimentConfig;

/// Point index used by the misclassification study.
pub const STUDY_INDEX: u64 = u64::MAX;

pub fn train_data_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index, TAG_TRAIN_DATA)
}

pub fn test_data_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index, TAG_TEST_DATA)
}

pub fn eval_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, index, TAG_EVAL)
}

/// Training seed of one model at one point; `train.seed` acts as a salt.
pub fn model_seed(ec: &ExperimentConfig, index: u64, kind: ModelKind) -> u64 {
    let salt = ec.train_config(kind).seed;
    derive_seed(ec.seed ^ salt, index, TAG_MODEL ^ (kind as u64 + 1))
}

/// Trains every configured model on `ds`, in configuration order.
pub fn train_models(ec: &ExperimentConfig, ds: &Dataset, index: u64) -> Result<Vec<(TrainedModel, TrainReport)>> {
    ec.models
        .iter()
        .map(|&kind| {
            let mut tc = ec.train_config(kind);
            tc.seed = model_seed(ec, index, kind);
            train(kind, ds, &tc)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SopRow {
    pub gamma_t_db: f64,
    /// `None` for conventional selection.
    pub model: Option<ModelKind>,
    pub sop: f64,
    pub std_err: f64,
    /// Paired difference to conventional selection on the same draws.
    pub gap: Option<f64>,
    pub gap_std_err: Option<f64>,
    pub p_s: f64,
    pub feasible: bool,
}

impl SopRow {
    pub const COLUMNS: [&'static str; 8] = ["gamma_t_db", "model", "sop", "stderr", "gap", "gap_stderr", "p_s", "feasible"];

    pub fn model_name(&self) -> String {
        self.model.map_or_else(|| "conventional".to_string(), |m| m.to_string())
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.gamma_t_db),
            self.model_name(),
            fmt_f64(self.sop),
            fmt_f64(self.std_err),
            fmt_opt(self.gap),
            fmt_opt(self.gap_std_err),
            fmt_f64(self.p_s),
            self.feasible.to_string(),
        ]
    }
}

/// SOP versus `Γ_T` for conventional selection and every configured model.
///
/// At each point: solve the power control, draw a training set, train the
/// models and evaluate all policies on the same `m_test` draws. Points where
/// the primary constraint is infeasible evaluate conventional selection with
/// `P_S = 0` and skip the learners. Each row is handed to `sink` as soon as it
/// is known.
pub fn run_sop_sweep<F>(ec: &ExperimentConfig, mut sink: F) -> Result<Vec<SopRow>>
where
    F: FnMut(&SopRow) -> Result<()>,
{
    ec.validate()?;
    let mut rows = Vec::new();
    let mut emit = |row: SopRow, rows: &mut Vec<SopRow>| -> Result<()> {
        sink(&row)?;
        rows.push(row);
        Ok(())
    };
    for (i, &g) in ec.gamma_t_db.iter().enumerate() {
        let index = i as u64;
        let cfg = ec.system_at(g);
        let power = solve_power(&cfg);
        let eval = eval_seed(ec.seed, index);
        if !power.feasible {
            let k = cfg.k;
            let r = policy_sop(&cfg, |xs| vec![k + 1; xs.len()], ec.m_test, eval)?;
            let row = SopRow {
                gamma_t_db: g,
                model: None,
                sop: r.conventional.sop,
                std_err: r.conventional.std_err,
                gap: None,
                gap_std_err: None,
                p_s: power.p_s,
                feasible: false,
            };
            emit(row, &mut rows)?;
            continue;
        }
        let conv = sop_direct(&cfg, ec.m_test, eval)?;
        emit(
            SopRow {
                gamma_t_db: g,
                model: None,
                sop: conv.sop,
                std_err: conv.std_err,
                gap: None,
                gap_std_err: None,
                p_s: power.p_s,
                feasible: true,
            },
            &mut rows,
        )?;
        if ec.models.is_empty() {
            continue;
        }
        let train_ds = generate_dataset(&cfg, ec.m_train, train_data_seed(ec.seed, index))?;
        for &kind in &ec.models {
            let mut tc = ec.train_config(kind);
            tc.seed = model_seed(ec, index, kind);
            let (model, _) = train(kind, &train_ds, &tc)?;
            let r = policy_sop(&cfg, |xs| model.predict_batch(xs), ec.m_test, eval)?;
            emit(
                SopRow {
                    gamma_t_db: g,
                    model: Some(kind),
                    sop: r.policy.sop,
                    std_err: r.policy.std_err,
                    gap: Some(r.gap),
                    gap_std_err: Some(r.gap_std_err),
                    p_s: power.p_s,
                    feasible: true,
                },
                &mut rows,
            )?;
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisclassRow {
    pub model: ModelKind,
    /// Transmitter label, or `None` for the overall ratio.
    pub label: Option<usize>,
    pub count: usize,
    pub errors: usize,
    pub rate: Option<f64>,
    pub std_err: Option<f64>,
}

impl MisclassRow {
    pub const COLUMNS: [&'static str; 6] = ["model", "class", "count", "errors", "rate", "stderr"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.model.to_string(),
            self.label.map_or_else(|| "all".to_string(), |l| l.to_string()),
            self.count.to_string(),
            self.errors.to_string(),
            fmt_opt(self.rate),
            fmt_opt(self.std_err),
        ]
    }

    /// One row per class, then the overall row.
    pub fn from_report(model: ModelKind, r: &MetricsReport) -> Vec<Self> {
        let counts = r.class_counts();
        let errors = r.class_errors();
        let mut rows: Vec<Self> = (0..counts.len())
            .map(|c| Self {
                model,
                label: Some(c + 1),
                count: counts[c],
                errors: errors[c],
                rate: r.class_rates[c],
                std_err: r.class_std_err(c),
            })
            .collect();
        rows.push(Self {
            model,
            label: None,
            count: r.samples(),
            errors: errors.iter().sum(),
            rate: Some(r.overall),
            std_err: Some(r.overall_std_err()),
        });
        rows
    }
}

/// Per-class misclassification of every configured model at
/// `misclass_gamma_t_db`, trained on one dataset and scored on another.
pub fn run_misclass_study<F>(ec: &ExperimentConfig, mut sink: F) -> Result<Vec<(ModelKind, MetricsReport)>>
where
    F: FnMut(&MisclassRow) -> Result<()>,
{
    ec.validate()?;
    let cfg = ec.system_at(ec.misclass_gamma_t_db);
    let train_ds = generate_dataset(&cfg, ec.m_train, train_data_seed(ec.seed, STUDY_INDEX))?;
    let test_ds = generate_dataset(&cfg, ec.misclass_m_test, test_data_seed(ec.seed, STUDY_INDEX))?;
    let mut out = Vec::new();
    for &kind in &ec.models {
        let mut tc = ec.train_config(kind);
        tc.seed = model_seed(ec, STUDY_INDEX, kind);
        let (model, _) = train(kind, &train_ds, &tc)?;
        let report = misclassification_report(&model, &test_ds)?;
        for row in MisclassRow::from_report(kind, &report) {
            sink(&row)?;
        }
        out.push((kind, report));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub gamma_t_db: f64,
    pub p_s: f64,
    pub feasible: bool,
    /// Primary outage without secondary interference.
    pub baseline_outage: f64,
    /// Closed-form primary outage at `p_s`.
    pub outage: f64,
    pub mc_outage: f64,
    pub mc_std_err: f64,
}

impl PowerRow {
    pub const COLUMNS: [&'static str; 7] =
        ["gamma_t_db", "p_s", "feasible", "baseline_outage", "outage", "mc_outage", "mc_stderr"];

    pub fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.gamma_t_db),
            fmt_f64(self.p_s),
            self.feasible.to_string(),
            fmt_f64(self.baseline_outage),
            fmt_f64(self.outage),
            fmt_f64(self.mc_outage),
            fmt_f64(self.mc_std_err),
        ]
    }
}

/// Secondary power per sweep point with the primary outage it causes,
/// checked by simulation.
pub fn run_power_check<F>(ec: &ExperimentConfig, mut sink: F) -> Result<Vec<PowerRow>>
where
    F: FnMut(&PowerRow) -> Result<()>,
{
    ec.validate()?;
    let mut rows = Vec::new();
    for (i, &g) in ec.gamma_t_db.iter().enumerate() {
        let cfg = ec.system_at(g);
        let power = solve_power(&cfg);
        let (mc, se) = primary_outage_monte_carlo(&cfg, power.p_s, ec.power_samples, derive_seed(ec.seed, i as u64, TAG_POWER));
        let row = PowerRow {
            gamma_t_db: g,
            p_s: power.p_s,
            feasible: power.feasible,
            baseline_outage: baseline_primary_outage(&cfg),
            outage: primary_outage(&cfg, power.p_s),
            mc_outage: mc,
            mc_std_err: se,
        };
        sink(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(models: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
            sweep.gamma_t_db = [0, 8]
            data.m_train = 300
            data.m_test = 2000
            models = [{models}]
            train.epochs = 1
            train.mlp_hidden = [8, 8]
            train.lstm_hidden = 6
            power.samples = 20000
            "#
        ))
        .unwrap()
    }

    #[test]
    fn baseline_only_sweep() {
        let ec = tiny("");
        let mut seen = 0;
        let rows = run_sop_sweep(&ec, |_| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(seen, 2);
        assert!(rows.iter().all(|r| r.model.is_none()));
        // 0 dB is infeasible for the default channel set.
        assert!(!rows[0].feasible && rows[0].p_s == 0.0 && rows[0].sop == 1.0);
        assert!(rows[1].feasible && rows[1].sop < 1.0);
    }

    #[test]
    fn learner_rows_follow_conventional_row() {
        let ec = tiny("\"gnb\", \"mlp\"");
        let rows = run_sop_sweep(&ec, |_| Ok(())).unwrap();
        let names: Vec<String> = rows.iter().map(SopRow::model_name).collect();
        assert_eq!(names, ["conventional", "conventional", "gnb", "mlp"]);
        for r in &rows[2..] {
            let gap = r.gap.unwrap();
            assert!((r.sop - gap - rows[1].sop).abs() < 1e-12);
            assert!(gap >= 0.0);
        }
        assert_eq!(rows, run_sop_sweep(&ec, |_| Ok(())).unwrap());
    }

    #[test]
    fn sink_error_aborts() {
        let ec = tiny("");
        let mut calls = 0;
        let r = run_sop_sweep(&ec, |_| {
            calls += 1;
            Err(crate::Error::EmptyDataset)
        });
        assert!(r.is_err());
        assert_eq!(calls, 1);
    }

    #[test]
    fn adding_points_keeps_earlier_ones() {
        let a = tiny("");
        let mut b = a.clone();
        b.gamma_t_db.push(12.0);
        let ra = run_sop_sweep(&a, |_| Ok(())).unwrap();
        let rb = run_sop_sweep(&b, |_| Ok(())).unwrap();
        assert_eq!(ra[..], rb[..2]);
    }

    #[test]
    fn misclass_rows() {
        let ec = tiny("\"gnb\"");
        let mut rows = Vec::new();
        let reports = run_misclass_study(&ec, |r| {
            rows.push(r.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(rows.len(), ec.system.k + 2);
        let overall = rows.last().unwrap();
        assert_eq!(overall.label, None);
        assert_eq!(overall.count, ec.misclass_m_test);
        assert_eq!(overall.rate, Some(reports[0].1.overall));
    }

    #[test]
    fn power_rows() {
        let rows = run_power_check(&tiny(""), |_| Ok(())).unwrap();
        assert!(!rows[0].feasible);
        assert!(rows[0].baseline_outage > 0.1);
        assert!((rows[1].outage - 0.1).abs() < 1e-12);
        assert!((rows[1].mc_outage - 0.1).abs() < 4.0 * rows[1].mc_std_err);
    }
}
