//! `secsel`: command-line driver for the transmitter-selection experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "secsel", version, about = "Secrecy-aware transmitter selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `experiment.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `experiment.out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated models (knn, gnb, svm, mlp, lstm); overrides `models`.
    #[arg(long, global = true)]
    pub models: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Bin,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training and test datasets at the study operating point.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Train models on a dataset file and save them.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training set; defaults to `<out>/train.csv`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score saved models on a test set and by secrecy outage.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Test set; defaults to `<out>/test.csv`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Directory holding `<model>.model` files; defaults to `<out>`.
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Secrecy outage versus Γ_T for conventional selection and every model.
    SopSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Per-class misclassification of every model.
    MisclassReport {
        #[command(flatten)]
        common: Common,
    },
    /// Secondary power and resulting primary outage per sweep point.
    PowerCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Compare backpropagated gradients with finite differences.
    GradCheck {
        #[command(flatten)]
        common: Common,
        /// Samples in the checked batch.
        #[arg(long, default_value_t = 10)]
        batch: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Operation counts and feedback volume of each scheme.
    Complexity {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData { common, format } => commands::gen_data(&common, format),
        Command::Train { common, data } => commands::train(&common, data),
        Command::Evaluate { common, data, model_dir } => commands::evaluate(&common, data, model_dir),
        Command::SopSweep { common } => commands::sop_sweep(&common),
        Command::MisclassReport { common } => commands::misclass_report(&common),
        Command::PowerCheck { common } => commands::power_check(&common),
        Command::GradCheck {
            common,
            batch,
            step,
            tolerance,
        } => commands::grad_check(&common, batch, step, tolerance),
        Command::Complexity { common } => commands::complexity(&common),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
