use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "refcast",
    version,
    about = "Reference class forecasting for capital projects",
    propagate_version = true
)]
pub struct Cli {
    /// Emit machine-readable JSON instead of the human-readable report
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a historical project dataset and optionally re-save it
    Ingest(IngestArgs),
    /// Select a reference class from a dataset
    ClassBuild(ClassBuildArgs),
    /// Test whether two reference classes are statistically comparable
    ClassTest(ClassTestArgs),
    /// Summarize a class's deviation distribution
    Summarize(SummarizeArgs),
    /// Optimism-bias uplift for an acceptable overrun risk
    Uplift(UpliftArgs),
    /// Uplifted budget for a base cost estimate
    Forecast(ForecastArgs),
    /// Risk allowance implied by an uplifted budget
    Allowance(ForecastArgs),
    /// Regress an intuitive estimate toward the class mean
    Regress(RegressArgs),
    /// Place a forecasting situation on the learning/incentives diagnostic
    Diagnose(DiagnoseArgs),
    /// Check a funding structure against the funding rules
    CheckFunding(DocumentArgs),
    /// Split a cost increase between local authority and funder
    Apportion(ApportionArgs),
    /// Check that a risk register is complete and owned
    RiskRegister(DocumentArgs),
    /// Net present value and internal rate of return of a cashflow
    Appraise(AppraiseArgs),
    /// Run the biased-forecasting Monte Carlo simulator
    Simulate(SimulateArgs),
    /// Full five-step reference class forecast narrative
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Dataset file (.csv or .json)
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the validated dataset here (format from the extension)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassBuildArgs {
    /// Dataset file (.csv or .json)
    pub data: PathBuf,
    /// Class filter (JSON)
    #[arg(long)]
    pub filter: PathBuf,
    /// Input format; inferred from the extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the class file here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassTestArgs {
    /// First class file
    pub first: PathBuf,
    /// Second class file
    pub second: PathBuf,
    /// Significance level
    #[arg(long, default_value_t = refcast_core::refclass::DEFAULT_ALPHA)]
    pub alpha: f64,
}

/// Where a reference class comes from: a class file, or a dataset and filter.
#[derive(Debug, Args)]
pub struct ClassSource {
    /// Class file written by `class-build --out`
    #[arg(long, required_unless_present = "data", conflicts_with_all = ["data", "filter"])]
    pub class: Option<PathBuf>,
    /// Dataset to select the class from (needs --filter)
    #[arg(long, requires = "filter")]
    pub data: Option<PathBuf>,
    /// Class filter (JSON) applied to --data
    #[arg(long, requires = "data")]
    pub filter: Option<PathBuf>,
    /// Format of --data; inferred from the extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub source: ClassSource,
    /// Write plot-ready ECDF points (CSV) here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UpliftArgs {
    #[command(flatten)]
    pub source: ClassSource,
    /// Acceptable risk that the uplifted budget is exceeded, e.g. 0.2 for P80
    #[arg(long)]
    pub risk: f64,
    /// Report negative uplifts as zero
    #[arg(long)]
    pub clamp_nonnegative: bool,
}

/// Currency and price basis of amounts given on the command line.
#[derive(Debug, Args)]
pub struct UnitArgs {
    /// Currency code of the amounts
    #[arg(long)]
    pub currency: Option<String>,
    /// `constant` or `nominal`
    #[arg(long)]
    pub price_basis: Option<String>,
    /// Base year for constant prices
    #[arg(long)]
    pub base_year: Option<i32>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub source: ClassSource,
    /// Base cost estimate (defaults to the class's currency and price basis)
    #[arg(long)]
    pub base: String,
    /// Acceptable risk that the uplifted budget is exceeded, e.g. 0.2 for P80
    #[arg(long)]
    pub risk: f64,
    /// Treat negative uplifts as zero
    #[arg(long)]
    pub clamp_nonnegative: bool,
    #[command(flatten)]
    pub unit: UnitArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variable {
    TotalCost,
    DeviationFraction,
    DurationDays,
    Benefit,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Mean outcome of the reference class
    #[arg(long)]
    pub mean: f64,
    /// Intuitive (inside-view) estimate
    #[arg(long, allow_hyphen_values = true)]
    pub intuitive: f64,
    /// Reliability of the estimate in [0, 1], judged subjectively
    #[arg(long, required_unless_present = "pairs", conflicts_with = "pairs")]
    pub rho: Option<f64>,
    /// CSV of past `prediction,outcome` pairs to estimate reliability from
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Quantity both estimates are expressed in
    #[arg(long, value_enum, default_value_t = Variable::TotalCost)]
    pub variable: Variable,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Profile JSON: one profile, or a list of named archetypes
    pub profile: PathBuf,
    /// Learning composite at or above which learning counts as good
    #[arg(long, default_value_t = 0.5)]
    pub learning_threshold: f64,
    /// Alignment composite at or above which incentives count as aligned
    #[arg(long, default_value_t = 0.5)]
    pub alignment_threshold: f64,
}

#[derive(Debug, Args)]
pub struct DocumentArgs {
    /// JSON document to check
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApportionArgs {
    /// Size of this cost increase
    #[arg(long)]
    pub amount: String,
    /// Cost increases already incurred
    #[arg(long, default_value = "0")]
    pub prior: String,
    /// Risk allowance agreed at approval
    #[arg(long)]
    pub allowance: String,
    #[command(flatten)]
    pub unit: UnitArgs,
}

#[derive(Debug, Args)]
pub struct AppraiseArgs {
    /// Cashflows: JSON list of {period, amount} or CSV with `period,amount`
    pub cashflows: PathBuf,
    /// Discount rate for the NPV
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON)
    pub config: PathBuf,
    /// Override the config's seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's trial count
    #[arg(long)]
    pub trials: Option<usize>,
    /// Budget with raw forecasts instead of reference-class uplifts
    #[arg(long)]
    pub no_debias: bool,
    /// Write calibration rows (CSV) here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub source: ClassSource,
    /// Base cost estimate (defaults to the class's currency and price basis)
    #[arg(long)]
    pub base: String,
    /// Intuitive estimate of this project's overrun as a fraction, e.g. 0.1
    #[arg(long, allow_hyphen_values = true)]
    pub intuitive: f64,
    /// Reliability of the intuitive estimate in [0, 1], judged subjectively
    #[arg(long, required_unless_present = "pairs", conflicts_with = "pairs")]
    pub rho: Option<f64>,
    /// CSV of past `prediction,outcome` pairs to estimate reliability from
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Acceptable overrun risks to budget for (repeatable)
    #[arg(long, default_values_t = [0.5, 0.2])]
    pub risk: Vec<f64>,
    /// Treat negative uplifts as zero
    #[arg(long)]
    pub clamp_nonnegative: bool,
    #[command(flatten)]
    pub unit: UnitArgs,
    /// Also write the report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}
