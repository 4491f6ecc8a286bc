//! `qus`: simulate phantoms, build B-mode and entropy images, train and
//! evaluate segmentation networks, and compare their scores.

mod commands;
mod config;
mod data;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{bmode, entropy, eval, simulate, stats, train};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qus", version, about = "Quantitative ultrasound segmentation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a labeled phantom dataset.
    Simulate(simulate::SimulateArgs),
    /// Reconstruct an 8-bit B-mode image from an RF frame.
    Bmode(bmode::BmodeArgs),
    /// Compute a sliding-window entropy map from an RF frame.
    Entropy(entropy::EntropyArgs),
    /// Train a segmentation network on B-mode or entropy inputs.
    Train(train::TrainArgs),
    /// Score predictions against ground truth.
    Eval(eval::EvalArgs),
    /// Rank-sum comparison of the Dice scores in two reports.
    Stats(stats::StatsArgs),
}

/// Honors `QUS_THREADS` as the worker count for data-parallel stages.
fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("QUS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("QUS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Bmode(a) => bmode::run(a),
        Command::Entropy(a) => entropy::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Stats(a) => stats::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("qus: {e}");
            e.exit_code()
        }
        // The panic hook has already printed the message.
        Err(_) => ExitCode::from(1),
    }
}
