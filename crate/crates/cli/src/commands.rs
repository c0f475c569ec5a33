use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use secsel_core::experiment::{
    complexity_estimate, eval_seed, feedback_overhead, misclassification_report, model_seed, run_misclass_study,
    run_power_check, run_sop_sweep, test_data_seed, train_data_seed, ComplexityParams, CsvSink, ExperimentConfig,
    MisclassRow, PowerRow, Scheme, SopRow, STUDY_INDEX,
};
use secsel_core::experiment::{fmt_f64, fmt_opt};
use secsel_core::learners::{gradient_check, load_model, save_model, train as fit, ModelKind};
use secsel_core::{generate_dataset, load_dataset, policy_sop, save_dataset};

use crate::{Common, Format};

struct Run {
    ec: ExperimentConfig,
    hash: String,
}

impl Run {
    fn new(common: &Common) -> Result<Self> {
        let mut ec = match &common.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = common.seed {
            ec.seed = seed;
        }
        if let Some(out) = &common.out {
            ec.out_dir = out.clone();
        }
        if let Some(list) = &common.models {
            ec.models = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse)
                .collect::<secsel_core::Result<_>>()?;
        }
        fs::create_dir_all(&ec.out_dir).with_context(|| format!("creating {}", ec.out_dir.display()))?;
        let hash = ec.hash();
        Ok(Self { ec, hash })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.ec.out_dir.join(name)
    }

    fn csv(&self, name: &str, table: &str, columns: &[&str]) -> Result<CsvSink<BufWriter<File>>> {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(CsvSink::new(BufWriter::new(file), table, &self.hash, self.ec.seed, columns)?)
    }
}

fn dataset_name(split: &str, format: Format) -> String {
    match format {
        Format::Csv => format!("{split}.csv"),
        Format::Bin => format!("{split}.bin"),
    }
}

pub fn gen_data(common: &Common, format: Format) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let ec = &run.ec;
    let cfg = ec.system_at(ec.misclass_gamma_t_db);
    for (split, m, seed) in [
        ("train", ec.m_train, train_data_seed(ec.seed, STUDY_INDEX)),
        ("test", ec.misclass_m_test, test_data_seed(ec.seed, STUDY_INDEX)),
    ] {
        let ds = generate_dataset(&cfg, m, seed)?;
        let path = run.path(&dataset_name(split, format));
        save_dataset(&ds, &path)?;
        eprintln!("wrote {} ({} samples)", path.display(), ds.len());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn train(common: &Common, data: Option<PathBuf>) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let ec = &run.ec;
    let data = data.unwrap_or_else(|| run.path("train.csv"));
    let ds = load_dataset(&data).with_context(|| format!("loading {} (run gen-data first?)", data.display()))?;
    let mut log = run.csv(
        "training.csv",
        "training",
        &["model", "epoch", "loss", "full_loss", "train_size", "converged"],
    )?;
    for &kind in &ec.models {
        let mut tc = ec.train_config(kind);
        tc.seed = model_seed(ec, STUDY_INDEX, kind);
        eprintln!("training {kind} on {} samples", ds.len());
        let (model, report) = fit(kind, &ds, &tc)?;
        let head = |epoch: String, loss: String, full: String| {
            vec![
                kind.to_string(),
                epoch,
                loss,
                full,
                report.train_size.to_string(),
                report.converged.to_string(),
            ]
        };
        if report.epoch_loss.is_empty() {
            log.row(&head(String::new(), String::new(), String::new()))?;
        }
        for (e, &loss) in report.epoch_loss.iter().enumerate() {
            log.row(&head((e + 1).to_string(), fmt_f64(loss), fmt_opt(report.full_loss.get(e).copied())))?;
        }
        save_model(&model, &run.path(&format!("{kind}.model")))?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate(common: &Common, data: Option<PathBuf>, model_dir: Option<PathBuf>) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let ec = &run.ec;
    let data = data.unwrap_or_else(|| run.path("test.csv"));
    let ds = load_dataset(&data).with_context(|| format!("loading {}", data.display()))?;
    let model_dir = model_dir.unwrap_or_else(|| ec.out_dir.clone());
    let mut classes = run.csv("evaluation.csv", "evaluation", &MisclassRow::COLUMNS)?;
    let mut sop = run.csv(
        "evaluation_sop.csv",
        "evaluation_sop",
        &["model", "sop", "stderr", "conventional_sop", "conventional_stderr", "gap", "gap_stderr"],
    )?;
    let cfg = &ds.meta.config;
    for &kind in &ec.models {
        let path = model_dir.join(format!("{kind}.model"));
        let model = load_model(&path).with_context(|| format!("loading {} (run train first?)", path.display()))?;
        if model.kind() != kind {
            bail!("{} holds a {} model", path.display(), model.kind());
        }
        let mut report = misclassification_report(&model, &ds)?;
        let r = policy_sop(cfg, |xs| model.predict_batch(xs), ec.misclass_m_test, eval_seed(ec.seed, STUDY_INDEX))?;
        report.sop = Some(r);
        for row in MisclassRow::from_report(kind, &report) {
            classes.row(&row.fields())?;
        }
        sop.row(&[
            kind.to_string(),
            fmt_f64(r.policy.sop),
            fmt_f64(r.policy.std_err),
            fmt_f64(r.conventional.sop),
            fmt_f64(r.conventional.std_err),
            fmt_f64(r.gap),
            fmt_f64(r.gap_std_err),
        ])?;
        eprintln!("{kind}: misclassification {:.4}, SOP {:.5}", report.overall, r.policy.sop);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn sop_sweep(common: &Common) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let mut sink = run.csv("sop_sweep.csv", "sop_sweep", &SopRow::COLUMNS)?;
    run_sop_sweep(&run.ec, |row| {
        eprintln!("{} dB {}: SOP {:.5}", row.gamma_t_db, row.model_name(), row.sop);
        sink.row(&row.fields())
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn misclass_report(common: &Common) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let mut sink = run.csv("misclass.csv", "misclass", &MisclassRow::COLUMNS)?;
    run_misclass_study(&run.ec, |row| {
        if row.label.is_none() {
            eprintln!("{}: misclassification {}", row.model, fmt_opt(row.rate));
        }
        sink.row(&row.fields())
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn power_check(common: &Common) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let mut sink = run.csv("power.csv", "power_check", &PowerRow::COLUMNS)?;
    run_power_check(&run.ec, |row| sink.row(&row.fields()))?;
    Ok(ExitCode::SUCCESS)
}

/// Exit status 1 when any checked model exceeds the tolerance.
pub fn grad_check(common: &Common, batch: usize, step: f64, tolerance: f64) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let ec = &run.ec;
    if batch == 0 {
        bail!("--batch must be at least 1");
    }
    let cfg = ec.system_at(ec.misclass_gamma_t_db);
    let ds = generate_dataset(&cfg, batch, train_data_seed(ec.seed, STUDY_INDEX))?;
    let mut sink = run.csv(
        "gradcheck.csv",
        "gradient_check",
        &["model", "checked", "total", "max_rel_error", "max_abs_error", "worst_block", "worst_index", "passed"],
    )?;
    let mut ok = true;
    for &kind in &ec.models {
        let mut tc = ec.train_config(kind);
        tc.seed = model_seed(ec, STUDY_INDEX, kind);
        let r = gradient_check(kind, &ds.samples, step, tolerance, &tc)?;
        eprintln!("{kind}: max relative error {:e} over {} coordinates", r.max_rel_error, r.checked);
        ok &= r.passed();
        sink.row(&[
            kind.to_string(),
            r.checked.to_string(),
            r.total.to_string(),
            fmt_f64(r.max_rel_error),
            fmt_f64(r.max_abs_error),
            r.worst_block.to_string(),
            r.worst_index.to_string(),
            r.passed().to_string(),
        ])?;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub fn complexity(common: &Common) -> Result<ExitCode> {
    let run = Run::new(common)?;
    let k = run.ec.system.k as u64;
    let mut sink = run.csv("complexity.csv", "complexity", &["scheme", "k", "operations", "feedback"])?;
    let schemes = std::iter::once(Scheme::Conventional).chain(run.ec.models.iter().map(|&m| Scheme::Learned(m)));
    let mut params = ComplexityParams::for_k(k);
    params.n_c = run.ec.train_config(ModelKind::Lstm).lstm_hidden as u64;
    let [l1, l2] = run.ec.train_config(ModelKind::Mlp).mlp_hidden;
    (params.l1, params.l2) = (l1 as u64, l2 as u64);
    for scheme in schemes {
        sink.row(&[
            scheme.to_string(),
            k.to_string(),
            complexity_estimate(scheme, &params)?.to_string(),
            feedback_overhead(scheme, k)?.to_string(),
        ])?;
    }
    Ok(ExitCode::SUCCESS)
}

