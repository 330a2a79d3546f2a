//! `itl`: compute zonal interface transfer limits from nodal CSV data.
//!
//! Exit codes: 0 success, 1 fatal error, 2 partial success (some interface
//! solves failed; details in run_manifest.json).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use itl_core::io::load_config;
use itl_core::pipeline::{run_pipeline, run_ptdf, run_validate};

#[derive(Parser)]
#[command(name = "itl", version, about = "Zonal interface transfer limits from nodal transmission data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: prep, solve, contingencies, aggregation, reports.
    Run {
        /// Path to the key=value run configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Load, prepare, and validate the network without solving.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Dump the prepared network's PTDF matrix as CSV on stdout.
    Ptdf {
        #[arg(long)]
        config: PathBuf,
        /// Slack (reference) bus id.
        #[arg(long)]
        slack: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> itl_core::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let outcome = run_pipeline(&config)?;
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            println!(
                "{} interfaces, {} solves ({} failed); results in {}",
                outcome.interfaces,
                outcome.solves,
                outcome.failed_solves,
                outcome.output_dir.display()
            );
            Ok(ExitCode::from(outcome.status.exit_code() as u8))
        }
        Command::Validate { config } => {
            let config = load_config(&config)?;
            let warnings = run_validate(&config)?;
            for warning in &warnings {
                eprintln!("warning: {warning}");
            }
            println!("network is valid");
            Ok(ExitCode::SUCCESS)
        }
        Command::Ptdf { config, slack } => {
            let config = load_config(&config)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run_ptdf(&config, &slack, &mut lock)?;
            lock.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
