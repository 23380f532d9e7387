use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::{Parser, Subcommand};

use photospring_cli::commands;
use photospring_cli::config::{load_config, Scenario};
use photospring_cli::error::{CliError, ExitCode};

/// Photothermal cavity optomechanics: simulation and parameter estimation.
#[derive(Parser)]
#[command(name = "photospring", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for data files and the report bundle.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format (only `csv` is supported).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the cavity across resonance at constant actuator velocity.
    Scan(RunArgs),
    /// Heater-pulse self-locking run.
    Selflock(RunArgs),
    /// Small-signal transfer-function probe of the detuning equation.
    Probe(RunArgs),
    /// Generate a synthetic noisy phase dataset from the forward model.
    Synth(RunArgs),
    /// Fit a phase dataset with the configured pipeline.
    Fit(RunArgs),
    /// Detuning sweep at several powers with curve and power-law aggregation.
    Sweep(RunArgs),
    /// Monte-Carlo comparison of the two estimation methods.
    Compare(RunArgs),
}

fn execute(expected: Scenario, args: &RunArgs) -> Result<(), CliError> {
    if args.format != "csv" {
        return Err(CliError::new(
            ExitCode::Config,
            format!(
                "unsupported output format `{}`; only `csv` is available",
                args.format
            ),
        ));
    }
    let config = load_config(&args.config)?;
    if config.scenario != expected {
        return Err(CliError::new(
            ExitCode::Config,
            format!(
                "config defines a [{}] scenario but the `{expected}` subcommand was invoked",
                config.scenario
            ),
        ));
    }
    let seed = args.seed.unwrap_or(config.rng_seed);
    commands::run(&config, &args.out, seed)?;
    println!(
        "report written to {}",
        args.out.join("report.json").display()
    );
    Ok(())
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    let (scenario, args) = match &cli.command {
        Command::Scan(a) => (Scenario::Scan, a),
        Command::Selflock(a) => (Scenario::Selflock, a),
        Command::Probe(a) => (Scenario::Probe, a),
        Command::Synth(a) => (Scenario::Synth, a),
        Command::Fit(a) => (Scenario::Fit, a),
        Command::Sweep(a) => (Scenario::Sweep, a),
        Command::Compare(a) => (Scenario::Compare, a),
    };
    match execute(scenario, args) {
        Ok(()) => ProcessExit::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ProcessExit::from(err.code as u8)
        }
    }
}
