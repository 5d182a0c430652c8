use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use ssvqd_cli::{execute, Command, RunConfig, EXIT_NOT_CONVERGED};

#[derive(Parser)]
#[command(name = "ssvqd", version, about = "Orbital-optimised excited states by variational quantum deflation")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Lowest full-CI eigenpairs of the whole orbital space.
    Fci,
    /// State-specific orbital-optimised deflation.
    Ssvqd,
    /// State-averaged orbital optimisation with deflation.
    Savqd,
    /// Analytic gradients against finite differences.
    Gradcheck,
    /// Exterior-algebra identities and the overlap embedding.
    OverlapCheck,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Fci => Command::Fci,
        Sub::Ssvqd => Command::Ssvqd,
        Sub::Savqd => Command::Savqd,
        Sub::Gradcheck => Command::Gradcheck,
        Sub::OverlapCheck => Command::OverlapCheck,
    };
    let loaded = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let mut config = match loaded {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.output {
        config.output_dir = out;
    }
    let dir = config.output_dir.clone();
    match execute(command, &config, &dir) {
        Ok(outcome) => {
            if outcome.exit_code == EXIT_NOT_CONVERGED {
                error!("run did not converge; partial results written to {}", dir.display());
            } else if outcome.exit_code != 0 {
                error!("{}", outcome.record.warnings.join("; "));
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
