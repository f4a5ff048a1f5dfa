//! `mvu` — solve, simulate, verify, and sweep a portfolio-consumption model
//! whose strategy is immune to short spike deviations.
//!
//! Exit codes: 0 success, 1 I/O, 2 validation, 3 solver failure,
//! 4 verification failure.  Errors print one JSON line to stderr.

mod commands;
mod config;
mod error;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvu_core::solver::{Convention, SolveMethod};

use config::{RunConfig, SweepParam, SweepSection};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "mvu",
    version,
    about = "Equilibrium portfolio-consumption solver, Monte Carlo simulator, and spike-deviation verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the model; write the solution table and a summary
    Solve(CommonArgs),
    /// Solve, simulate the resulting strategy, and compare with closed forms
    Simulate(CommonArgs),
    /// Solve, then test the strategy against a grid of spike deviations
    Verify(CommonArgs),
    /// Re-solve across a list of values of one model parameter
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Foc,
    TheoremLiteral,
}

impl From<ConventionArg> for Convention {
    fn from(value: ConventionArg) -> Self {
        match value {
            ConventionArg::Foc => Convention::Foc,
            ConventionArg::TheoremLiteral => Convention::TheoremLiteral,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Picard,
    Ode,
    Both,
}

impl From<MethodArg> for SolveMethod {
    fn from(value: MethodArg) -> Self {
        match value {
            MethodArg::Picard => SolveMethod::Picard,
            MethodArg::Ode => SolveMethod::Ode,
            MethodArg::Both => SolveMethod::Both,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration; every omitted field takes its default
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (the MVU_OUT_DIR environment variable wins over this)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed override for both simulation and verification
    #[arg(long)]
    seed: Option<u64>,
    /// Consumption-rule convention override
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
    /// Exposure solve-method override
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter to sweep: gamma | beta | delta | rho | mu | sigma | r
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated values for the swept parameter
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
}

/// Materializes the run configuration: config file (or defaults), then
/// command-line overrides, then the environment override for the output
/// directory.
fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let shown = path.display().to_string();
            let text = fs::read_to_string(path).map_err(|e| CliError::ConfigParse {
                path: shown.clone(),
                message: e.to_string(),
            })?;
            RunConfig::from_json(&shown, &text)?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = &args.out {
        config.out_dir = dir.clone();
    }
    if let Ok(dir) = std::env::var("MVU_OUT_DIR") {
        if !dir.is_empty() {
            config.out_dir = PathBuf::from(dir);
        }
    }
    if let Some(seed) = args.seed {
        config.simulation.seed = seed;
        config.verifier.seed = seed;
    }
    if let Some(convention) = args.convention {
        config.solver.convention = convention.into();
    }
    if let Some(method) = args.method {
        config.solver.method = method.into();
    }
    Ok(config)
}

/// Flags override the config's sweep section field by field.
fn resolve_sweep(config: &mut RunConfig, args: &SweepArgs) -> Result<(), CliError> {
    let param = match &args.param {
        Some(name) => Some(SweepParam::parse(name)?),
        None => config.sweep.as_ref().map(|s| s.param),
    };
    let values = args
        .values
        .clone()
        .or_else(|| config.sweep.as_ref().map(|s| s.values.clone()));
    config.sweep = match (param, values) {
        (Some(param), Some(values)) => Some(SweepSection { param, values }),
        _ => None,
    };
    Ok(())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(args) => commands::run_solve(&load_config(&args)?),
        Command::Simulate(args) => commands::run_simulate(&load_config(&args)?),
        Command::Verify(args) => commands::run_verify(&load_config(&args)?),
        Command::Sweep(args) => {
            let mut config = load_config(&args.common)?;
            resolve_sweep(&mut config, &args)?;
            commands::run_sweep(&config)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.render_json());
            err.exit_code()
        }
    };
    std::process::exit(code);
}
