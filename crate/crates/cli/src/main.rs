use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holonomic_cli::config::MethodName;
use holonomic_cli::error::exit;
use holonomic_cli::{emit_timeseries, run_scenario, CliError, Overrides, ScenarioConfig};

/// Holonomic dark-state propagation: run scenarios and emit JSON reports.
#[derive(Parser)]
#[command(name = "holonomic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Three-stage holonomic gate.
    Gate(RunArgs),
    /// Holonomy of a loop in angle space.
    Loop(RunArgs),
    /// Full dynamics over a sweep of durations.
    Compare(RunArgs),
    /// Bright/dark decomposition of a coupling matrix.
    MorrisShore(RunArgs),
    /// Two-level dark-state transfer.
    Stirap(RunArgs),
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario file; the built-in default is used otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Primary step count (gate steps, loop steps per segment, STIRAP steps).
    #[arg(long)]
    steps: Option<usize>,
    /// Method to run; repeat for several.
    #[arg(long = "method")]
    methods: Vec<MethodName>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a CSV time series (gate and stirap only).
    #[arg(long)]
    timeseries: Option<PathBuf>,
    /// Bound applied to every check.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn load(kind: &str, args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::default_for(kind).expect("every run subcommand has a default"),
    };
    if config.scenario.kind() != kind {
        return Err(CliError::config("kind", format!("config is `{}` but the subcommand is `{kind}`", config.scenario.kind())));
    }
    let overrides = Overrides { steps: args.steps, methods: args.methods.clone(), tolerance: args.tolerance };
    overrides.apply(config)
}

fn run(kind: &str, args: &RunArgs) -> Result<u8, CliError> {
    let config = load(kind, args)?;
    let report = run_scenario(&config)?;
    if let Some(path) = &args.timeseries {
        emit_timeseries(&config, path)?;
    }
    let text = report.to_json()?;
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e))?,
        None => print!("{text}"),
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} = {:.3e} (tolerance {:.1e})", c.name, c.value, c.tolerance);
    }
    Ok(if report.passed { exit::PASS } else { exit::TOLERANCE })
}

fn selftest() -> u8 {
    let outcomes = holonomic_core::acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        exit::PASS
    } else {
        exit::TOLERANCE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Gate(a) => ("gate", a),
        Command::Loop(a) => ("loop", a),
        Command::Compare(a) => ("compare", a),
        Command::MorrisShore(a) => ("morris-shore", a),
        Command::Stirap(a) => ("stirap", a),
        Command::Selftest => return ExitCode::from(selftest()),
    };
    match run(kind, args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
