//! `rcs`: command-line front end.
//!
//! Exit status is 0 on success, 1 when a verification verdict fails and 2 on
//! usage or configuration errors. Machine output goes to `--out` or stdout;
//! everything else goes to stderr.

mod commands;
mod overlay;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "rcs",
    version,
    about = "Moments of noisy random circuits: simulation, closed forms and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a single-qubit channel.
    Channel(commands::ChannelArgs),
    /// Sample one circuit (or replay a recorded one) and print its output distribution.
    Simulate(commands::SimulateArgs),
    /// Monte Carlo estimators over sampled circuits, as CSV.
    Mc(commands::McArgs),
    /// Evaluate a closed-form moment, bound or regime condition.
    Closedform(commands::ClosedformArgs),
    /// Label recursions and second-moment transfer tools.
    Statmech(commands::StatmechArgs),
    /// Run verification suites.
    Verify(commands::VerifyArgs),
    /// Merge Monte Carlo CSV files and summarise verdicts.
    Report(commands::ReportArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Io {
    /// JSON file with default values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write machine-readable output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Ok,
    VerificationFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Channel(a) => commands::channel(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Mc(a) => commands::mc(a),
        Command::Closedform(a) => commands::closedform(a),
        Command::Statmech(a) => commands::statmech(a),
        Command::Verify(a) => commands::verify(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
