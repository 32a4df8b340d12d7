mod commands;
mod config;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { kind: "usage", code: EXIT_USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { kind: "data", code: EXIT_DATA, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: "io", code: EXIT_DATA, message: message.into() }
    }
}

impl From<corrt::Error> for CliError {
    fn from(e: corrt::Error) -> Self {
        use corrt::Error as E;
        let (kind, code) = match &e {
            E::Domain(_) | E::Parameter(_) => ("usage", EXIT_USAGE),
            E::Construction(_) => ("data", EXIT_DATA),
            _ if e.is_numerical() => ("numerical", EXIT_NUMERICAL),
            _ => ("internal", EXIT_NUMERICAL),
        };
        Self { kind, code, message: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "corrt", version, about = "CorrT tests and simulations for high-dimensional linear models")]
pub struct Cli {
    /// key=value file supplying defaults for the subcommand's flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for Monte Carlo runs
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test H0: coefficient of the tested column equals beta0
    #[command(args_override_self = true)]
    Test(TestArgs),
    /// Confidence set by inverting the test on a grid
    #[command(args_override_self = true)]
    Ci(CiArgs),
    /// Monte Carlo rejection rate for one DGP cell
    #[command(args_override_self = true)]
    Simulate(SimArgs),
    /// Rejection rate over a grid of local alternatives
    #[command(args_override_self = true)]
    Power(PowerArgs),
    /// Regenerate a built-in experiment
    #[command(args_override_self = true)]
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    pub data: PathBuf,
    /// Response column (name or 0-based index)
    #[arg(long, default_value = "y")]
    pub y_col: String,
    /// Tested column (name or 0-based index)
    #[arg(long)]
    pub test_col: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// JSON report path
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Grid size
    #[arg(long, default_value_t = 201)]
    pub grid_points: usize,
    /// Lower grid end; with --grid-hi fixes the grid instead of the automatic search
    #[arg(long, allow_negative_numbers = true, requires = "grid_hi")]
    pub grid_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "grid_lo")]
    pub grid_hi: Option<f64>,
    /// Initial automatic half-width in centring standard errors
    #[arg(long, default_value_t = 10.0)]
    pub half_width_se: f64,
    #[arg(long, default_value_t = 3)]
    pub max_doublings: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Sparse,
    Dense,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailArg {
    Gaussian,
    #[value(name = "student_t3", alias = "t3")]
    StudentT3,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Corrt,
    Debias,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DgpArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Sparse)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 250)]
    pub p: usize,
    #[arg(long, value_enum, default_value_t = TailArg::Gaussian)]
    pub design: TailArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = TailArg::Gaussian)]
    pub error: TailArg,
    /// Sparsity level (sparse mode)
    #[arg(long, default_value_t = 3)]
    pub s: usize,
    /// Nuisance signal strength a (dense mode)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Corrt)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dgp: DgpArgs,
    /// Local alternative h
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PowerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dgp: DgpArgs,
    /// Comma-separated values of h
    #[arg(long, default_value = "0,2,4,6", value_delimiter = ',', allow_negative_numbers = true)]
    pub h_grid: Vec<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Theorem1,
    Table1,
    Power,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub target: Target,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Override the scale's replication count
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

fn report_error(e: &CliError) -> ExitCode {
    let obj = serde_json::json!({ "error": { "kind": e.kind, "message": e.message, "exit_code": e.code } });
    eprintln!("{obj}");
    ExitCode::from(e.code)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = || match &cli.command {
        Command::Test(a) => commands::test(a),
        Command::Ci(a) => commands::ci(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Power(a) => commands::power(a),
        Command::Reproduce(a) => commands::reproduce(a),
    };
    match cli.threads {
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))?
            .install(exec),
        None => exec(),
    }
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}
