//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsiht::adaptive::IcKind;

/// Double sparse linear regression: group- and element-sparse fits by
/// adaptive iterative hard thresholding.
#[derive(Debug, Parser)]
#[command(name = "dsiht", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to CSV data and write a coefficients JSON.
    Fit(FitArgs),
    /// Run a seeded synthetic scenario and emit a metrics CSV.
    Simulate(SimArgs),
    /// Run the built-in benchmark suite and print pass/fail lines.
    Bench(BenchArgs),
}

/// Which information criterion ranks the `s0` grid candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IcChoice {
    /// Each candidate's own complexity-penalized selection objective.
    Sgc,
    /// Extended BIC.
    Ebic,
}

impl From<IcChoice> for IcKind {
    fn from(choice: IcChoice) -> IcKind {
        match choice {
            IcChoice::Sgc => IcKind::SparseGroupCriterion,
            IcChoice::Ebic => IcKind::Ebic,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Design matrix CSV (rows are observations; optional header row).
    #[arg(long)]
    pub x: PathBuf,
    /// Response CSV; a single column, or pick one with --y-col.
    #[arg(long)]
    pub y: PathBuf,
    /// Zero-based column of the response file to use.
    #[arg(long, default_value_t = 0)]
    pub y_col: usize,
    /// Group layout JSON: {"sizes": [..]} or {"membership": [..]}.
    #[arg(long)]
    pub groups: PathBuf,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a per-iteration trace CSV of the winning pass here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Threshold decay parameter, strictly inside (0, 1).
    #[arg(long, default_value_t = 0.9)]
    pub kappa: f64,
    /// Fix the within-group sparsity level (single-candidate grid).
    #[arg(long, conflicts_with = "s0_grid")]
    pub s0: Option<usize>,
    /// Comma-separated candidate levels for the adaptive sweep.
    #[arg(long, value_delimiter = ',')]
    pub s0_grid: Option<Vec<usize>>,
    /// Criterion ranking the grid candidates.
    #[arg(long, value_enum, default_value_t = IcChoice::Sgc)]
    pub ic: IcChoice,
    /// Multiplier on the complexity penalty in the selection criterion.
    #[arg(long, default_value_t = 1000.0)]
    pub ic_const: f64,
    /// Center design columns and response; the fit reports an intercept.
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Scenario JSON path.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the scenario's replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the scenario's base seed.
    #[arg(long, env = "DSIHT_SEED")]
    pub seed: Option<u64>,
    /// Vary one scenario field: "snr=1..10", "n=200..1000:200", "rho=0,0.5,0.9".
    #[arg(long)]
    pub sweep: Option<String>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fix the within-group sparsity level instead of the adaptive sweep.
    #[arg(long, conflicts_with = "s0_grid")]
    pub s0: Option<usize>,
    /// Comma-separated candidate levels for the adaptive sweep.
    #[arg(long, value_delimiter = ',')]
    pub s0_grid: Option<Vec<usize>>,
    /// Criterion ranking the grid candidates.
    #[arg(long, value_enum, default_value_t = IcChoice::Sgc)]
    pub ic: IcChoice,
    /// Multiplier on the complexity penalty in the selection criterion.
    #[arg(long, default_value_t = 1000.0)]
    pub ic_const: f64,
    /// Threshold decay parameter, strictly inside (0, 1).
    #[arg(long, default_value_t = 0.9)]
    pub kappa: f64,
    /// Record wall-clock runtimes. Off by default so identical runs produce
    /// byte-identical output.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Run only these benchmark indices (1-8), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<usize>>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub workers: Option<usize>,
}
