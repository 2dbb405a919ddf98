//! `scgl`: generate connection-graph data, fit SCGL or KRON, score fits and
//! run seeded experiment sweeps.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! run fails (I/O, parsing, numerics).

mod commands;
mod config;
mod experiment;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scgl_core::solver::Method;

use config::Family;

/// Marks an error as a usage problem (exit code 1).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser, Debug)]
#[command(name = "scgl", version, about = "Learn consistent connection graphs from vector-valued signals")]
struct Cli {
    /// Debug logging (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write ground truths and signal matrices for every trial and ratio.
    Generate {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Fit one signal matrix and write the learned graph.
    Fit(FitArgs),
    /// Score a fit against a ground truth and append one row to a results CSV.
    Eval(EvalArgs),
    /// Run a full sweep (family x ratio x method x trial) and aggregate it.
    Experiment {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Pick (alpha, beta) by k-fold held-out likelihood.
    Crossval(CrossvalArgs),
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// JSON experiment config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated sampling ratios.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<Method>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub eps_edge: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    /// JSON hyperparameter object (or an experiment config's `hyperparams`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "scgl")]
    pub method: Method,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Signal matrix (vn x M) in CSV or MatrixMarket form.
    #[arg(long)]
    pub signals: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Recorded with the fit.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// `fit.json` written by `scgl fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// `ground_truth.json` written by `scgl generate`.
    #[arg(long)]
    pub truth: PathBuf,
    /// Held-out signal matrix for the total-variation metric.
    #[arg(long)]
    pub test: PathBuf,
    /// Results CSV; created with a header when missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = scgl_core::metrics::DEFAULT_EDGE_EPS)]
    pub eps_edge: f64,
    /// Overrides the seed recorded in the fit.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub signals: PathBuf,
    /// Candidates as `alpha:beta`, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Writes the selection as JSON when given.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Generate { sweep } => commands::generate(&sweep),
        Command::Fit(args) => commands::fit(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Experiment { sweep, threads } => experiment::run(&sweep, threads),
        Command::Crossval(args) => commands::crossval(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let text = cause.to_string();
                if !msg.contains(&text) {
                    msg = format!("{msg}: {text}");
                }
            }
            eprintln!("error: {msg}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
