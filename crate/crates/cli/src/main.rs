//! `awemixer`: train, evaluate, ablate and probe the wavelet-enhanced mixer.

mod commands;
mod config;
mod exit;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AblateArgs, DecomposeArgs, EvaluateArgs, SweepArgs, SynthArgs, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "awemixer", version, about = "Wavelet-enhanced multi-scale forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on a CSV and write checkpoint, reports and history
    Train(TrainArgs),
    /// Score a saved checkpoint on one split
    Evaluate(EvaluateArgs),
    /// Train every ablation variant and tabulate degradation against the full model
    Ablate(AblateArgs),
    /// Vary fusion depth or decomposition level and collect test metrics
    Sweep(SweepArgs),
    /// Write the wavelet bands of one channel as CSV
    Decompose(DecomposeArgs),
    /// Generate a synthetic dataset
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
