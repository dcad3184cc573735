//! Command-line front end: evaluates the library over grids and writes CSV
//! or JSON.
//!
//! Exit codes: 0 success, 1 failed validation, 2 invalid arguments,
//! 3 accuracy failure, 4 I/O failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Grid, Layer};
use error::CliError;
use output::{Format, Sink};

#[derive(Debug, Parser)]
#[command(name = "threshold-diffusion", version, about = "Threshold diffusion numerics over grids")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "THRESHOLD_DIFFUSION_THREADS")]
    threads: Option<usize>,

    /// TOML file supplying defaults; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transition density p(t, x, z).
    Density(DensityArgs),
    /// Resolvent density u_q(x, z).
    Potential(PotentialArgs),
    /// Stationary density (needs mu1 > 0 > mu2).
    Stationary(StationaryArgs),
    /// Value function of the survival control problem.
    Value(ValueArgs),
    /// Monte Carlo terminal values and survival summary.
    Simulate(SimulateArgs),
    /// Laplace transforms of exit times through lower and upper barriers.
    ExitLt(ExitArgs),
    /// Built-in cross-check battery; prints a JSON report.
    Validate(ValidateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Potential(_) => "potential",
            Command::Stationary(_) => "stationary",
            Command::Value(_) => "value",
            Command::Simulate(_) => "simulate",
            Command::ExitLt(_) => "exit-lt",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Args)]
struct DiffusionArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma2: Option<f64>,
    /// Threshold level.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
}

#[derive(Debug, Args)]
struct QuadArgs {
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_subdivisions: Option<u64>,
    #[arg(long)]
    truncation_epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[command(flatten)]
    params: DiffusionArgs,
    #[command(flatten)]
    quad: QuadArgs,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Starting points, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    /// Evaluation grid lo:hi:n.
    #[arg(long, allow_hyphen_values = true)]
    z_grid: Option<Grid>,
    /// Evaluation points, comma separated (instead of --z-grid).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct PotentialArgs {
    #[command(flatten)]
    params: DiffusionArgs,
    /// Discount rates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    z_grid: Option<Grid>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct StationaryArgs {
    #[command(flatten)]
    params: DiffusionArgs,
    #[arg(long, allow_hyphen_values = true)]
    z_grid: Option<Grid>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct ValueArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu_bar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_bar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_low: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_low: Option<f64>,
    /// Survival level.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Horizon.
    #[arg(long = "T", visible_alias = "horizon", allow_hyphen_values = true)]
    horizon: Option<f64>,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long, allow_hyphen_values = true)]
    x_grid: Option<Grid>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: DiffusionArgs,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long = "T", visible_alias = "horizon", allow_hyphen_values = true)]
    horizon: Option<f64>,
    /// Maximum step size [default: 0.001].
    #[arg(long)]
    dt: Option<f64>,
    /// Number of paths [default: 10000].
    #[arg(long)]
    paths: Option<u64>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// corrected or euler [default: corrected].
    #[arg(long)]
    scheme: Option<String>,
    /// Survival is P(X_T >= level) [default: the threshold a].
    #[arg(long, allow_hyphen_values = true)]
    level: Option<f64>,
    /// Where to write the JSON summary (default: standard error).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExitArgs {
    #[command(flatten)]
    params: DiffusionArgs,
    /// Starting point.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Lower barrier y < x.
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<f64>,
    /// Upper barrier z > x.
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<f64>,
    #[arg(long)]
    q_grid: Option<Grid>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Paths per Monte Carlo experiment [default: 100000].
    #[arg(long)]
    paths: Option<u64>,
    /// [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces every upper tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Run only these criteria, comma separated.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u32>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let layer = Layer::load(cli.config.as_deref(), cli.command.name())?;

    let threads = layer.opt_u64(cli.threads.map(|n| n as u64), "threads")?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Args("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Args(format!("thread pool: {e}")))?;
    }
    let format = match cli.format {
        Some(f) => f,
        None => layer
            .opt_string(None, "format")?
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or_default(),
    };
    let output = match cli.output {
        Some(p) => Some(p),
        None => layer.opt_string(None, "output")?.map(PathBuf::from),
    };

    let mut sink = Sink::open(output.as_deref())?;
    let result = commands::dispatch(cli.command, &layer, format, &mut sink);
    if result.is_err() {
        sink.discard();
    }
    result
}
