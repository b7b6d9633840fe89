use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "halfspace", version, about = "Noise-tolerant halfspace learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the learner once and write `run_report.csv` and `summary.txt`.
    Run(RunArgs),
    /// Cross-product of parameter axes, median over seeds per cell.
    Sweep(SweepArgs),
    /// Empirical covariance spectrum study on banded samples.
    Spectral(SpectralArgs),
    /// Re-render plots from `sweep.csv` / `spectral.csv` in a directory.
    Report(ReportArgs),
}

/// Options shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat key=value file; flags take precedence over its keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// csv, svg or both.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LearnerArgs {
    /// malicious or nasty.
    #[arg(long)]
    pub mode: Option<String>,
    /// Dimension.
    #[arg(long = "d")]
    pub d: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Noise rate.
    #[arg(long)]
    pub eta: Option<f64>,
    /// gaussian, exponential, logistic or cube.
    #[arg(long)]
    pub dist: Option<String>,
    /// randomflip, bandflip, faroutlier[:R=..], boundaryerase.
    #[arg(long)]
    pub strategy: Option<String>,
    /// practical or theory.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record per-phase traces and write `diagnostics.csv`.
    #[arg(long)]
    pub diagnostics: bool,
    /// Override a profile constant, e.g. `--set xi_max=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long = "sweep-d", value_delimiter = ',', value_name = "LIST")]
    pub sweep_d: Vec<usize>,
    #[arg(long = "sweep-eta", value_delimiter = ',', value_name = "LIST")]
    pub sweep_eta: Vec<f64>,
    #[arg(long = "sweep-eps", value_delimiter = ',', value_name = "LIST")]
    pub sweep_eps: Vec<f64>,
    /// Repeat the flag for several strategies.
    #[arg(long = "sweep-strategy", value_name = "STRATEGY")]
    pub sweep_strategy: Vec<String>,
    /// Seeds as a list or a half-open range `a..b`.
    #[arg(long = "sweep-seed", value_name = "SEEDS")]
    pub sweep_seed: Option<String>,
    #[arg(long = "sweep-n-scale", value_delimiter = ',', value_name = "LIST")]
    pub sweep_n_scale: Vec<f64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub dims: Vec<usize>,
    #[arg(long = "n-factors", value_delimiter = ',', value_name = "LIST")]
    pub n_factors: Vec<f64>,
    /// Band half-width.
    #[arg(long)]
    pub b: Option<f64>,
    /// Search-ball radius used for the rescaled bound.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding `sweep.csv` and/or `spectral.csv`.
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Where to write plots; defaults to the input directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
