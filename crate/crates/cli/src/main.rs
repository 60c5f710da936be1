use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nanodimer_cli::{load_config, run, CliError, Experiment};

/// Optical bistability of a quantum dot next to a metal nanoparticle.
#[derive(Parser)]
#[command(name = "nanodimer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary branches versus drive amplitude (branch.csv, region.csv).
    Steady(Common),
    /// Time-domain up/down amplitude sweep (hysteresis.csv, thresholds.csv).
    Sweep(Common),
    /// Bistable window and derived coupling constants (region.csv).
    Region(Common),
    /// Mono/bistable map over two parameters (phase.csv).
    Phase(Common),
    /// Interpolated permittivity and polarizability (material.csv).
    Material(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// `section.key=value`, applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn execute(experiment: Experiment, args: &Common) -> Result<(), CliError> {
    let config = load_config(&args.config, experiment, &args.overrides)?;
    let report = run(&config, &args.out)?;
    if !args.quiet {
        for line in &report.summary {
            println!("{line}");
        }
        for file in &report.files {
            println!("wrote {}", file.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Steady(a) => (Experiment::Steady, a),
        Command::Sweep(a) => (Experiment::Sweep, a),
        Command::Region(a) => (Experiment::Region, a),
        Command::Phase(a) => (Experiment::Phase, a),
        Command::Material(a) => (Experiment::Material, a),
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.category());
            ExitCode::FAILURE
        }
    }
}
