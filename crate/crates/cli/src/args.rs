use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "arw",
    version,
    about = "Adaptive rolling-window model assessment and selection under distribution shift"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the current-period mean of a sample stream (or one model's risk).
    Assess(AssessArgs),
    /// Compare two models on their loss differences.
    Compare(CompareArgs),
    /// Select a model with a single-elimination tournament.
    Select(SelectArgs),
    /// Select the model with the lowest mean loss over a fixed window.
    Baseline(BaselineArgs),
    /// Run a synthetic experiment and report mean excess risks per method.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieBreakArg {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    /// Constant mean.
    Stationary,
    /// Jumps, sinusoid, stationary stretch, random walk.
    Composite,
    /// One shift, `--shift-periods` periods before the horizon.
    Changepoint,
    /// Random walk whose mean moves by `--drift-step` every period.
    Drift,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the machine-readable report to this file.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Report format for --output.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// Confidence parameter of the deviation proxy, in (0, 1).
    #[arg(long, default_value_t = 0.1, value_name = "D")]
    pub delta_prime: f64,

    /// Width of the value range (b - a); 0 disables the range term.
    #[arg(long, default_value_t = 0.0, value_name = "M")]
    pub range_width: f64,

    /// Which window wins when objectives tie.
    #[arg(long, value_enum, default_value = "smallest")]
    pub tie_break: TieBreakArg,
}

#[derive(Debug, Clone, Args)]
pub struct AssessArgs {
    /// CSV with header `period,value`.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "losses",
        required_unless_present = "losses"
    )]
    pub samples: Option<PathBuf>,

    /// CSV with header `period,sample,model,loss`; requires --model.
    #[arg(long, value_name = "PATH", requires = "model")]
    pub losses: Option<PathBuf>,

    /// Model to assess when reading --losses.
    #[arg(long, value_name = "NAME")]
    pub model: Option<String>,

    #[command(flatten)]
    pub window: WindowArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// CSV with header `period,sample,model,loss`.
    #[arg(long, value_name = "PATH")]
    pub losses: PathBuf,

    /// The two models to compare, `FIRST,SECOND`; ties go to FIRST.
    #[arg(long, value_name = "A,B", value_delimiter = ',', num_args = 1)]
    pub models: Vec<String>,

    #[command(flatten)]
    pub window: WindowArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// CSV with header `period,sample,model,loss`.
    #[arg(long, value_name = "PATH")]
    pub losses: PathBuf,

    #[command(flatten)]
    pub window: WindowArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    /// CSV with header `period,sample,model,loss`.
    #[arg(long, value_name = "PATH")]
    pub losses: PathBuf,

    /// Number of most recent periods to pool (>= 1).
    #[arg(long, value_name = "K")]
    pub window: usize,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "stationary")]
    pub scenario: ScenarioArg,

    /// Noise variance of every sample.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Number of independent trials.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,

    /// Seed of the trial streams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Window menu, strictly ascending.
    #[arg(long, value_delimiter = ',', default_value = "1,4,16,64,256")]
    pub windows: Vec<usize>,

    /// Number of periods.
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,

    /// Changepoint: periods after the shift.
    #[arg(long, default_value_t = 20)]
    pub shift_periods: usize,

    /// Changepoint: size of the shift.
    #[arg(long, default_value_t = 3.0)]
    pub shift_size: f64,

    /// Drift: per-period change of the mean.
    #[arg(long, default_value_t = 0.1)]
    pub drift_step: f64,

    /// Seed of the composite and drift mean sequences.
    #[arg(long, default_value_t = 2024)]
    pub means_seed: u64,

    #[command(flatten)]
    pub window: WindowArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}
