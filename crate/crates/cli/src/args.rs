use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "covadj",
    version,
    about = "Variance inflation and planning tools for covariate adjustment in two-arm trials"
)]
pub struct Cli {
    /// Also write a run manifest (JSON) to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Observed variance inflation of a fitted covariate set, by every route.
    Vif(VifArgs),
    /// Expected inflation, its variance and precision factors for a planned N.
    Plan(PlanArgs),
    /// Break-even partial correlations over a range of residual degrees of freedom.
    Breakeven(BreakevenArgs),
    /// Historical score against refitting its constituent covariates.
    Score(ScoreArgs),
    /// Re-randomisation, normal and bootstrap simulation of every covariate subset.
    Simulate(SimulateArgs),
    /// Write the seeded N = 46 synthetic dataset as CSV.
    GenData(GenDataArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column holding the two treatment labels.
    #[arg(long, default_value = "treatment")]
    pub treatment: String,
    /// Covariate schema, e.g. `age:continuous,sex:binary=M|F,site:categorical`.
    #[arg(long)]
    pub covariates: String,
    /// Outcome column; rows missing it are dropped as well.
    #[arg(long)]
    pub outcome: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    All,
    Regression,
    Quadratic,
    Rao,
    ChiSquare,
}

#[derive(Debug, Args)]
pub struct VifArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Covariates to fit, comma separated; defaults to all declared ones.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum, default_value = "all")]
    pub route: Vec<RouteArg>,
    /// Adds this amount to the quadratic-form λ, to exercise the
    /// discrepancy check.
    #[arg(long, hide = true)]
    pub perturb: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Table,
    Csv,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Total sample size.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub k_from: usize,
    #[arg(long, default_value_t = 8)]
    pub k_to: usize,
    /// Extra nuisance parameters such as centre effects.
    #[arg(long, default_value_t = 0)]
    pub extra_dof: usize,
    /// Residual variance with covariates over that without, in (0, 1].
    #[arg(long)]
    pub rmse_ratio: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BreakevenArgs {
    #[arg(long, default_value_t = 2)]
    pub nu_from: usize,
    #[arg(long, default_value_t = 100)]
    pub nu_to: usize,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub n: usize,
    /// Covariates the score is built from.
    #[arg(long)]
    pub k: usize,
    /// Multiple correlation of the refitted covariates with the outcome.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_current: f64,
    /// Correlation of the historical score with the outcome.
    #[arg(long, allow_hyphen_values = true)]
    pub rho_historical: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma separated subset of permutation, mvn, bootstrap.
    #[arg(long, default_value = "permutation,mvn,bootstrap")]
    pub schemes: String,
    /// Replicates per cell.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for results.csv, summary.json and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Shuffle observed labels instead of independent coin flips.
    #[arg(long)]
    pub fixed_margins: bool,
    #[arg(long, default_value_t = 100)]
    pub max_redraws: usize,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = covadj_core::synthetic::DEFAULT_SEED)]
    pub seed: u64,
    /// Destination file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
