use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exact finite-depth computations with probability measures on Cantor space.
#[derive(Debug, Parser)]
#[command(name = "cantor-bayes", version)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model checks.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Mass of a cylinder under a measure, or of a product cylinder under a joint.
    Eval(EvalArgs),
    /// Marginal mass along the prefixes of a word.
    Marginal(MarginalArgs),
    /// Conditional mass P(x | y) along the prefixes of x.
    Conditional(ConditionalArgs),
    /// The conditional martingale P(x | y_target[..n]) for n = 0..=n_max.
    Martingale(MartingaleArgs),
    /// Residual P_X(x) − Σ_{|y|=n} P(x, y) of the finite mixture identity.
    MixtureCheck(MixtureCheckArgs),
    /// Total variation between two measures at depths 0..=max_depth.
    TvCurve(TvCurveArgs),
    /// Posterior table over length-k parameter cylinders.
    Posterior(PosteriorArgs),
    /// Singularity matrix, recovery experiment and verdict.
    ConsistencyReport(ConsistencyArgs),
    /// Draw a seeded sample prefix.
    Sample(SampleArgs),
    /// Finite Martin-Löf style tests.
    #[command(subcommand)]
    Test(TestCommand),
    /// Counterexample joint checks.
    #[command(subcommand)]
    Counterexample(CounterexampleCommand),
}

/// A measure given as a builtin name, inline JSON or a JSON file.
#[derive(Debug, Args)]
pub struct MeasureArg {
    /// Measure spec: `uniform`, inline JSON, or a path to a JSON file.
    #[arg(long)]
    pub measure: String,
}

/// A joint given as a builtin name, inline JSON or a JSON file.
#[derive(Debug, Args)]
pub struct JointArg {
    /// Joint spec: `beta_bernoulli`, `product_uniform`, `counterexample`,
    /// inline JSON, or a path to a JSON file.
    #[arg(long)]
    pub joint: String,
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Check normalization, nonnegativity and additivity up to a depth.
    Validate(ModelValidateArgs),
}

#[derive(Debug, Args)]
pub struct ModelValidateArgs {
    #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
    pub measure: Option<String>,
    #[arg(long)]
    pub joint: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
    pub measure: Option<String>,
    #[arg(long, requires = "y")]
    pub joint: Option<String>,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: Option<String>,
}

#[derive(Debug, Args)]
pub struct MarginalArgs {
    #[command(flatten)]
    pub joint: JointArg,
    #[arg(long, value_enum, default_value_t = AxisArg::X)]
    pub axis: AxisArg,
    #[arg(long)]
    pub word: String,
}

#[derive(Debug, Args)]
pub struct ConditionalArgs {
    #[command(flatten)]
    pub joint: JointArg,
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub x: String,
}

#[derive(Debug, Args)]
pub struct MartingaleArgs {
    #[command(flatten)]
    pub joint: JointArg,
    #[arg(long)]
    pub x: String,
    /// Eventually periodic sequence `HEAD(REPEAT)`, e.g. `(1)` or `110(0)`.
    #[arg(long)]
    pub y_target: String,
    #[arg(long)]
    pub n_max: usize,
}

#[derive(Debug, Args)]
pub struct MixtureCheckArgs {
    #[command(flatten)]
    pub joint: JointArg,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct TvCurveArgs {
    #[command(flatten)]
    pub measure: MeasureArg,
    /// The second measure, in the same forms as `--measure`.
    #[arg(long)]
    pub against: String,
    #[arg(long)]
    pub max_depth: usize,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    #[command(flatten)]
    pub joint: JointArg,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    #[command(flatten)]
    pub joint: JointArg,
    #[arg(long)]
    pub param_depth: usize,
    #[arg(long)]
    pub sample_depth: usize,
    #[arg(long, default_value = "1/100")]
    pub epsilon: String,
    /// Minimum recovery rate for a consistent verdict.
    #[arg(long, default_value = "9/10")]
    pub threshold: String,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Number of recovery trials that also get a concentration curve.
    #[arg(long, default_value_t = 4)]
    pub curves: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub measure: MeasureArg,
    #[arg(long)]
    pub length: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum TestCommand {
    /// Check level bounds and nesting of a test under a measure, or under
    /// the conditional of a joint given `--y`.
    Validate(TestValidateArgs),
    /// Transfer a test valid for the X-marginal to the conditional given `--y`.
    Transfer(TestTransferArgs),
    /// One level of the test covering alpha in the counterexample joint.
    Counterexample(TestCounterexampleArgs),
    /// The diagonal test on the product space.
    Diagonal(TestDiagonalArgs),
    /// Likelihood-ratio deficiency of a word against a reference pool.
    Deficiency(TestDeficiencyArgs),
}

#[derive(Debug, Args)]
pub struct TestValidateArgs {
    /// Test JSON (`{"levels":{"1":["0"],...}}`), inline or a file path.
    #[arg(long)]
    pub test: String,
    #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
    pub measure: Option<String>,
    #[arg(long)]
    pub joint: Option<String>,
    #[arg(long, requires = "joint", default_value = "")]
    pub y: String,
}

#[derive(Debug, Args)]
pub struct TestTransferArgs {
    #[arg(long)]
    pub test: String,
    #[command(flatten)]
    pub joint: JointArg,
    #[arg(long, default_value = "")]
    pub y: String,
    #[arg(long = "M")]
    pub m: u64,
    #[arg(long, default_value_t = 6)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct CounterexampleSpecArgs {
    #[arg(long)]
    pub alpha: String,
    /// Comma-separated approximant words, e.g. `10,1010,101010`.
    #[arg(long)]
    pub approximants: String,
}

#[derive(Debug, Args)]
pub struct TestCounterexampleArgs {
    #[command(flatten)]
    pub spec: CounterexampleSpecArgs,
    /// Test level.
    #[arg(long)]
    pub n: usize,
    /// Word depth of the level.
    #[arg(long)]
    pub depth: usize,
}

#[derive(Debug, Args)]
pub struct TestDiagonalArgs {
    #[arg(long)]
    pub levels: usize,
    #[arg(long, default_value = "product_uniform")]
    pub joint: String,
}

#[derive(Debug, Args)]
pub struct TestDeficiencyArgs {
    #[command(flatten)]
    pub measure: MeasureArg,
    #[arg(long)]
    pub x: String,
    /// Pool JSON `[{"weight":"1/2","model":{...}},...]`, inline or a file path.
    #[arg(long)]
    pub pool: String,
}

#[derive(Debug, Subcommand)]
pub enum CounterexampleCommand {
    /// Tabulate P_Y(1^k) against 1 − r(a_{k−1}) and the limit 1 − alpha.
    Verify(CounterexampleSpecArgs),
}
