use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcbm::commands::{run, Command};
use tcbm::config::RunConfig;

/// Simulate time-changed Brownian markets and check the optimal strategy.
#[derive(Parser)]
#[command(name = "tcbm", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample paths and write them as CSV.
    Simulate(RunArgs),
    /// Check both change-of-variable identities, the isometry and martingality.
    Verify(RunArgs),
    /// Build the optimal strategy and compare with the closed-form value.
    Optimize(RunArgs),
    /// Compare the optimal strategy with a perturbation family.
    Scan(RunArgs),
    /// Compare the unconditional objective with the averaged conditional value.
    Tower(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `simulation.n_paths`.
    #[arg(long)]
    paths: Option<usize>,
    /// Overrides `simulation.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Optimize(a) => (Command::Optimize, a),
        Cmd::Scan(a) => (Command::Scan, a),
        Cmd::Tower(a) => (Command::Tower, a),
    };
    let result = RunConfig::from_path(&args.config).and_then(|mut config| {
        if let Some(seed) = args.seed {
            config.simulation.seed = seed;
        }
        if let Some(n) = args.paths {
            config.simulation.n_paths = n;
        }
        if let Some(w) = args.workers {
            config.simulation.workers = w;
        }
        config.validate_against("")?;
        run(command, &config, &args.out)
    });
    match result {
        Ok(summary) => {
            for check in &summary.checks {
                println!("{:<48} {}", check.name, check.verdict);
            }
            println!("{}: {}", command.name(), if summary.passed { "pass" } else { "fail" });
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error ({}): {e}", args.config.display());
            ExitCode::from(2)
        }
    }
}
