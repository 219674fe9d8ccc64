//! `gldelta`: fit, select and inspect dynamic Gaussian graphical models.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use gldelta::evaluation::ComparisonScope;
use gldelta::selection::DfConvention;
use gldelta::SolverSettings;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "gldelta", version, about = "Sparse, slowly changing dynamic Gaussian graphical models")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for grid searches and studies (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// JSON object of flag values for the subcommand; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one penalized model.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Fit a grid of penalties and select by AIC, AICc and BIC.
    #[command(args_override_self = true)]
    Grid(GridArgs),
    /// Draw a ground-truth network and sample datasets from it.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Repeat simulate, select and score, and average the error rates.
    #[command(args_override_self = true)]
    Study(StudyArgs),
    /// Edge selection frequencies over random subsamples.
    #[command(args_override_self = true)]
    Stability(StabilityArgs),
    /// Compare consecutive networks of a fitted model.
    #[command(args_override_self = true)]
    Diff(DiffArgs),
}

pub const SUBCOMMANDS: [&str; 6] = ["fit", "grid", "simulate", "study", "stability", "diff"];

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with a `GENE@TIME` header and one replicate per row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub genes: usize,
    #[arg(long)]
    pub times: usize,
    /// Largest time lag with free entries (default: 1, or 0 for one time).
    #[arg(long)]
    pub lag_cap: Option<usize>,
    /// Comma-separated gene order (default: lexicographic).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    pub gene_order: Option<Vec<String>>,
    /// Use the raw covariance instead of the correlation matrix.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = SolverSettings::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = SolverSettings::default().max_iter)]
    pub max_iter: usize,
    #[arg(long, default_value_t = SolverSettings::default().rho)]
    pub rho: f64,
    #[arg(long)]
    pub no_adaptive_rho: bool,
    /// Entries at or below this magnitude are not edges.
    #[arg(long, default_value_t = SolverSettings::default().edge_threshold)]
    pub edge_threshold: f64,
}

impl SolverArgs {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            rho: self.rho,
            adaptive_rho: !self.no_adaptive_rho,
            edge_threshold: self.edge_threshold,
        }
    }
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    #[arg(long)]
    pub penalize_diagonal: bool,
    /// Leave the gene-to-itself cross-time entries out of the fusion penalty.
    #[arg(long)]
    pub no_fuse_self: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub lambda1: f64,
    #[arg(long)]
    pub lambda2: f64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DfArg {
    Entries,
    FusedGroups,
}

impl From<DfArg> for DfConvention {
    fn from(d: DfArg) -> Self {
        match d {
            DfArg::Entries => DfConvention::Entries,
            DfArg::FusedGroups => DfConvention::FusedGroups,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    /// Lag-0 gene pairs at every time.
    Lag0,
    /// Every unmasked coordinate.
    All,
}

impl From<ScopeArg> for ComparisonScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Lag0 => ComparisonScope::Lag0Network,
            ScopeArg::All => ComparisonScope::AllUnmasked,
        }
    }
}

#[derive(Debug, Args)]
pub struct GridFlags {
    /// Comma-separated λ1 values.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', conflicts_with = "lambda1_log")]
    pub lambda1: Option<Vec<f64>>,
    /// Log-spaced λ1 values as `lo,hi,count`.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', num_args = 1)]
    pub lambda1_log: Option<Vec<f64>>,
    /// Comma-separated λ2 values.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0,0.1,0.2,0.4,0.8,1.6")]
    pub lambda2: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DfArg::FusedGroups)]
    pub df: DfArg,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Start from study scenario 1 to 4 instead of the defaults.
    #[arg(long)]
    pub scenario: Option<usize>,
    /// Genes carrying the network.
    #[arg(long)]
    pub active_genes: Option<usize>,
    /// Independent genes appended after the active ones.
    #[arg(long)]
    pub pad: Option<usize>,
    #[arg(long)]
    pub times: Option<usize>,
    /// Replicates per dataset.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m0: Option<usize>,
    #[arg(long)]
    pub births: Option<usize>,
    #[arg(long)]
    pub deaths: Option<usize>,
    #[arg(long)]
    pub autocorrelation: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Datasets drawn from the network.
    #[arg(long, default_value_t = 1)]
    pub datasets: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Row label in study.csv (default: `scenarioK` or `custom`).
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub grid: GridFlags,
    #[arg(long, value_enum, default_value_t = ScopeArg::Lag0)]
    pub scope: ScopeArg,
    #[arg(long)]
    pub no_standardize: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub lambda1: f64,
    #[arg(long)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 100)]
    pub subsamples: usize,
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    /// `report.json` written by `fit` or `grid`.
    #[arg(long, conflicts_with = "theta", required_unless_present = "theta")]
    pub report: Option<PathBuf>,
    /// Whitespace-separated precision matrix.
    #[arg(long, requires_all = ["genes", "times"])]
    pub theta: Option<PathBuf>,
    #[arg(long)]
    pub genes: Option<usize>,
    #[arg(long)]
    pub times: Option<usize>,
    #[arg(long)]
    pub lag_cap: Option<usize>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    pub gene_names: Option<Vec<String>>,
    /// Override the edge threshold stored in the report.
    #[arg(long)]
    pub edge_threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gldelta::Error),
    #[error("{message}")]
    NotConverged { message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use gldelta::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::NotConverged { .. } => 3,
            CliError::Core(e) => match e {
                E::NotConverged { .. } => 3,
                E::Io { .. } => 4,
                E::Csv(_) if wraps_io(e) => 4,
                _ => 2,
            },
        }
    }
}

fn wraps_io(e: &(dyn std::error::Error + 'static)) -> bool {
    let mut cur = e.source();
    while let Some(s) = cur {
        if s.is::<std::io::Error>() {
            return true;
        }
        cur = s.source();
    }
    false
}

fn parse_args() -> Result<Cli, clap::Error> {
    let args: Vec<String> = std::env::args().collect();
    let args = match config::config_path(&args) {
        Some(path) => match config::config_flags(path.as_ref()) {
            Ok(flags) => config::merge(args, flags, &SUBCOMMANDS),
            Err(msg) => {
                return Err(clap::Error::raw(clap::error::ErrorKind::InvalidValue, msg + "\n"))
            }
        },
        None => args,
    };
    Cli::try_parse_from(args)
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
