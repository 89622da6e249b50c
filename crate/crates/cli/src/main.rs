//! `heavycs`: anytime-valid confidence sequences over streams, plus the
//! Monte-Carlo experiment runners, behind one binary.
//!
//! `stream` consumes observations row by row and emits one confidence set
//! per row; `coverage`, `widths`, and `crossing` drive seeded simulation
//! experiments; `stitchplan` dumps the epoch table of the stitched
//! construction. Output is either a flat delimiter-separated table (`csv`)
//! or line-delimited JSON records (`jsonl`); floats print at 17 significant
//! digits so every row re-parses to identical values.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "heavycs",
    version,
    about = "Anytime-valid confidence sequences for heavy-tailed streams"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one estimator over an observation stream, one output row per input row
    Stream(StreamArgs),
    /// Estimate time-uniform miscoverage over seeded replications
    Coverage(CoverageArgs),
    /// Tabulate width quantiles on a (time, level) grid, one column per method
    Widths(WidthsArgs),
    /// Compare first threshold-crossing times of two methods on shared streams
    Crossing(CrossingArgs),
    /// Print the epoch table (levels and coefficients) of the stitched method
    Stitchplan(StitchplanArgs),
}

/// Output destination and encoding, shared by every subcommand.
#[derive(Args)]
struct IoArgs {
    /// Output path; stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output encoding
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    /// Flat comma-separated table with a header row
    Csv,
    /// One JSON record per line
    Jsonl,
}

/// Moment assumptions shared by estimators and generators.
#[derive(Args)]
struct MomentArgs {
    /// Conditional variance bound (moment order 2)
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Moment order in (1, 2]; values below 2 require --v
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Conditional central p-th moment bound (required when --p < 2)
    #[arg(long)]
    v: Option<f64>,
}

/// Estimator selection and construction knobs.
#[derive(Args)]
struct MethodArgs {
    /// Method id: ds, sn, catoni, catoni-stitched, catoni-onesided, p-catoni,
    /// or a reference method (chebyshev, chernoff, nmix, pm-hoeffding,
    /// stitched-subg, trivial-catoni, catoni-ci)
    #[arg(long, default_value = "catoni")]
    method: String,
    /// Error level in (0, 1)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    moment: MomentArgs,
    /// Coefficient schedule: tuned, constant:X, inv-sqrt, power, or table:a,b,...
    #[arg(long, default_value = "tuned")]
    schedule: String,
    /// Coefficient cap for the inv-sqrt schedule
    #[arg(long, default_value_t = 1.0)]
    cap: f64,
    /// Index floor for the variance-tuned schedule
    #[arg(long, default_value_t = 9)]
    floor_index: u64,
    /// Decay exponent for the power schedule, in [0, 1/2)
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
    /// Last planned epoch of the stitched method
    #[arg(long, default_value_t = 60)]
    max_epoch: u32,
    /// Level split "a,b" (summing to alpha) between the self-normalized
    /// quadratic set and its companion interval, or "none" to run the
    /// quadratic set alone
    #[arg(long)]
    alpha_split: Option<String>,
}

/// Data-generating process for the experiment subcommands.
#[derive(Args)]
struct FamilyArgs {
    /// Generator family
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    family: FamilyArg,
    /// Fixed stream mean; absent draws a seeded uniform center on [-10, 10]
    #[arg(long)]
    mean: Option<f64>,
    /// Degrees of freedom for the student-t family
    #[arg(long, default_value_t = 3.0)]
    nu: f64,
    /// Tail index for the pareto family, in (1, 2)
    #[arg(long, default_value_t = 1.8)]
    pareto_index: f64,
    /// Drift damping for the sde-drift family, |damping| <= 1
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum FamilyArg {
    Gaussian,
    StudentT,
    Pareto,
    SdeDrift,
}

#[derive(Args)]
struct StreamArgs {
    #[command(flatten)]
    method: MethodArgs,
    /// Input path; stdin when absent
    #[arg(long)]
    input: Option<PathBuf>,
    /// Emit the running intersection of all sets so far
    #[arg(long)]
    intersect: bool,
    /// Take per-observation variance bounds from the second input column
    #[arg(long)]
    heteroscedastic: bool,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    family: FamilyArgs,
    /// Take per-observation variance bounds from the generated stream
    #[arg(long)]
    heteroscedastic: bool,
    /// Root seed for the replication tree (required)
    #[arg(long)]
    seed: Option<u64>,
    /// Stream length per replication
    #[arg(long, default_value_t = 5000)]
    horizon: u64,
    /// Number of replications
    #[arg(long, default_value_t = 2000)]
    reps: u64,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct WidthsArgs {
    /// Comma-separated method ids, one width column each
    #[arg(long, value_delimiter = ',', default_value = "catoni")]
    methods: Vec<String>,
    /// Comma-separated error levels
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    alphas: Vec<f64>,
    #[command(flatten)]
    moment: MomentArgs,
    #[command(flatten)]
    family: FamilyArgs,
    /// Root seed for the replication tree (required)
    #[arg(long)]
    seed: Option<u64>,
    /// Largest tabulated time
    #[arg(long, default_value_t = 250)]
    horizon: u64,
    /// Number of replications
    #[arg(long, default_value_t = 50)]
    reps: u64,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct CrossingArgs {
    /// First method (numerator of the crossing-time ratio)
    #[arg(long, default_value = "trivial-catoni")]
    method: String,
    /// Second method (denominator), run on the same streams
    #[arg(long, default_value = "catoni")]
    method_b: String,
    /// Both methods stop once their lower bound exceeds this value
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Error level in (0, 1)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    moment: MomentArgs,
    #[command(flatten)]
    family: FamilyArgs,
    /// Root seed for the replication tree (required)
    #[arg(long)]
    seed: Option<u64>,
    /// Give up on a replication after this many observations
    #[arg(long, default_value_t = 10000)]
    horizon: u64,
    /// Number of replications
    #[arg(long, default_value_t = 100)]
    reps: u64,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct StitchplanArgs {
    /// Total error level spread over the epochs
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Last planned epoch (the table has max-epoch + 1 rows)
    #[arg(long, default_value_t = 20)]
    max_epoch: u32,
    #[command(flatten)]
    io: IoArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Stream(args) => commands::cmd_stream(args),
        Cmd::Coverage(args) => commands::cmd_coverage(args),
        Cmd::Widths(args) => commands::cmd_widths(args),
        Cmd::Crossing(args) => commands::cmd_crossing(args),
        Cmd::Stitchplan(args) => commands::cmd_stitchplan(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
