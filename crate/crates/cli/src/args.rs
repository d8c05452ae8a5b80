use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use localmax::{Loss, Metric, RatingsFormat};

use crate::grid::GridArgs;
use crate::sets::SetArgs;

#[derive(Debug, Parser)]
#[command(
    name = "localmax",
    version,
    about = "Local max matrix norms: evaluation, training and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the norm of a dense matrix with a certified gap.
    Norm(NormArgs),
    /// Fit a regularized factor model to a ratings file.
    Train(TrainArgs),
    /// Score a saved model on a ratings file.
    Evaluate(EvaluateArgs),
    /// Run the synthetic low-rank recovery study.
    Simulate(SimulateArgs),
    /// Grid search over (ζ, τ, λ) on train/validation/test ratings files.
    Gridsearch(GridsearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Tab,
    DoubleColon,
    Comma,
}

impl From<FormatArg> for RatingsFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tab => RatingsFormat::Tab,
            FormatArg::DoubleColon => RatingsFormat::DoubleColon,
            FormatArg::Comma => RatingsFormat::Comma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Squared,
    Absolute,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Squared => Loss::Squared,
            LossArg::Absolute => Loss::Absolute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Mse,
    Rmse,
    Mae,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Mse => Metric::Mse,
            MetricArg::Rmse => Metric::Rmse,
            MetricArg::Mae => Metric::Mae,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    /// Dense comma-separated matrix without header.
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub set: SetArgs,
    /// Relative certificate gap to reach.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Also print the maximizing row and column weights.
    #[arg(long)]
    pub show_weights: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Optional ratings scored after training; shares the id index with --train.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tab")]
    pub format: FormatArg,
    #[command(flatten)]
    pub set: SetArgs,
    /// Fit the raw ratings instead of their deviations from the training mean.
    #[arg(long)]
    pub no_center: bool,
    #[arg(long, default_value_t = 10)]
    pub rank: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, value_enum, default_value = "squared")]
    pub loss: LossArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the fitted model as JSON.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Write per-epoch loss, penalty and objective as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long, value_enum, default_value = "tab")]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value = "rmse")]
    pub metric: MetricArg,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 8)]
    pub rank: usize,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, env = "LOCALMAX_THREADS")]
    pub threads: Option<usize>,
    /// Results CSV, one row per (trial, method).
    #[arg(long)]
    pub output: PathBuf,
    /// Also write every grid cell's validation and test error.
    #[arg(long)]
    pub cells: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridsearchArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum, default_value = "tab")]
    pub format: FormatArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Fit the raw ratings instead of their deviations from the training mean.
    #[arg(long)]
    pub no_center: bool,
    #[arg(long, default_value_t = 30)]
    pub rank: usize,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "LOCALMAX_THREADS")]
    pub threads: Option<usize>,
    /// RMSE grid CSV (rows ζ, columns τ); summary, cells and config files
    /// are written next to it.
    #[arg(long)]
    pub output: PathBuf,
}
