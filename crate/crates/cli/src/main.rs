//! `qpf`: projection-filter experiments from JSON configs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpf_core::QpfError;

use commands::Context;
use config::ExperimentConfig;
use output::Output;

#[derive(Parser)]
#[command(name = "qpf", version, about = "Quantum projection filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter function on an energy grid.
    FilterCurve(RunArgs),
    /// Total-spin projection of a lattice trial state.
    J2Project(RunArgs),
    /// Energy filtering trajectories and baseline comparisons.
    EnergyRun(RunArgs),
    /// Fit times and phases to a pseudo-spectrum.
    Optimize(RunArgs),
    /// Run a schedule against a supplied spectrum.
    SpectralReplay(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Allow sectors above the dense size limit.
    #[arg(long)]
    heavy: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &QpfError) -> u8 {
    match err {
        QpfError::Convergence { .. } | QpfError::Extinction { .. } | QpfError::Dependency(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn run(name: &str, args: RunArgs, command: fn(&mut Context) -> qpf_core::Result<()>) -> Result<PathBuf, QpfError> {
    let config = ExperimentConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(config.seed);
    let heavy = args.heavy || config.heavy;
    let dir = args
        .out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&config.name));
    let out = Output::create(&dir)?;
    let echo = serde_json::to_value(&config)?;
    let mut ctx = Context { config, seed, heavy, out };
    command(&mut ctx)?;
    ctx.out.flag("heavy", heavy);
    ctx.out.finish(name, echo, seed)?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, command): (&str, RunArgs, fn(&mut Context) -> qpf_core::Result<()>) = match cli.command {
        Command::FilterCurve(a) => ("filter-curve", a, commands::filter_curve),
        Command::J2Project(a) => ("j2-project", a, commands::j2_project),
        Command::EnergyRun(a) => ("energy-run", a, commands::energy_run),
        Command::Optimize(a) => ("optimize", a, commands::optimize),
        Command::SpectralReplay(a) => ("spectral-replay", a, commands::spectral_replay),
    };
    match run(name, args, command) {
        Ok(dir) => {
            println!("{name}: wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
