use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracsis::harness::{run, ExperimentConfig, ExperimentKind};
use fracsis::Error;

/// Optimal control experiments for the fractional SIS model.
#[derive(Debug, Parser)]
#[command(name = "fracsis", version)]
struct Cli {
    /// Output directory, overriding `output.dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// March the HJB equation and write value/feedback profiles.
    Solve { config: PathBuf },
    /// Controlled and uncontrolled trajectories.
    Trajectory { config: PathBuf },
    /// Mesh refinement study against the stationary solution.
    Converge { config: PathBuf },
    /// Sweep over the order and the domain size.
    Sweep { config: PathBuf },
    /// Tabulate the stationary solution.
    Stationary { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let (kind, path) = match cli.command {
        Command::Solve { config } => (ExperimentKind::Solve, config),
        Command::Trajectory { config } => (ExperimentKind::Trajectory, config),
        Command::Converge { config } => (ExperimentKind::Converge, config),
        Command::Sweep { config } => (ExperimentKind::Sweep, config),
        Command::Stationary { config } => (ExperimentKind::Stationary, config),
    };

    let result = ExperimentConfig::from_path(&path).and_then(|config| {
        config.validate_for(kind)?;
        let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
        let summary = run(kind, &config, &out)?;
        Ok((summary, out))
    });
    match result {
        Ok((summary, out)) => {
            if !cli.quiet {
                println!("{summary}");
                println!("artifacts in {}", out.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::NumericalBlowup { .. } => 3,
                _ => 1,
            })
        }
    }
}
