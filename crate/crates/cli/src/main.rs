//! `fdaclust` executable.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numerical failure. Failures are also reported as a single JSON line on
//! standard error.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;

use crate::failure::Failure;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("FDACLUST_BUILD_HASH"), ")");

#[derive(Debug, Parser)]
#[command(name = "fdaclust", version = VERSION, about = "Clustering of functional data observed with measurement error")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for simulation and mixture restarts; overrides any seed in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: LevelFilter,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a replicate dataset as long-format CSV.
    Simulate(SimulateArgs),
    /// Correct replicate curves for measurement error under a fixed partition.
    Correct(CorrectArgs),
    /// Smooth curves into spline coefficients.
    Smooth(SmoothArgs),
    /// Fit Gaussian mixtures to coefficient rows and select by BIC.
    Cluster(ClusterArgs),
    /// Run the iterative correction and clustering procedure or a baseline.
    Run(RunArgs),
    /// Compare two partitions.
    Evaluate(EvaluateArgs),
    /// Run a Monte Carlo benchmark grid.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON scenario config.
    #[arg(long, conflicts_with_all = ["n", "structure", "sigma_x", "sigma_u", "rho"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub n: Option<usize>,
    #[arg(long, default_value = "sqexp")]
    pub structure: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_u: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Replicates per subject.
    #[arg(long = "J")]
    pub replicates: Option<usize>,
    /// Grid size.
    #[arg(long = "T")]
    pub grid_size: Option<usize>,
    /// Also write the true memberships as JSON.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    /// Long-format CSV dataset.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Memberships JSON (`{"labels": [...]}`).
    #[arg(long)]
    pub members: PathBuf,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// Curves JSON as written by `correct`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of basis functions; chosen from n and T when omitted.
    #[arg(long = "K")]
    pub n_basis: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MixtureArgs {
    /// Largest number of components.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u16).range(1..))]
    pub cmax: u16,
    /// Comma-separated covariance families.
    #[arg(long, value_delimiter = ',', default_value = "EII,VII,EEI,VVI,EEE,VVV")]
    pub families: Vec<String>,
    /// Random EM starts per candidate.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Coefficient CSV with a header row.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub mixture: MixtureArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Naive,
    Average,
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Oracle,
    Naive,
    Average,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "average")]
    pub init: InitArg,
    /// Starting memberships for `--init given`.
    #[arg(long, required_if_eq("init", "given"))]
    pub members: Option<PathBuf>,
    /// Cluster once without correction instead of iterating.
    #[arg(long, value_enum, conflicts_with_all = ["init", "members"])]
    pub baseline: Option<BaselineArg>,
    #[arg(long = "K")]
    pub n_basis: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub max_iter: usize,
    #[command(flatten)]
    pub mixture: MixtureArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Reference memberships: JSON with a `labels` field, or a dataset CSV with true labels.
    #[arg(long)]
    pub truth: PathBuf,
    /// Predicted memberships, in the same formats.
    #[arg(long)]
    pub pred: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON benchmark grid.
    #[arg(long)]
    pub grid: PathBuf,
    /// Overrides the replication count of the grid.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Also write per-replication values as CSV.
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if !e.use_stderr() {
                // --help and --version
                return ExitCode::from(code as u8);
            }
            let rendered = e.to_string();
            let summary: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect();
            Failure::Usage(summary.join(" ").trim_start_matches("error: ").to_string()).report();
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.global.log_level)
        .format_timestamp_millis()
        .init();
    if let Some(threads) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.exit_code())
        }
    }
}
