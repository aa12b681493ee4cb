// SPDX-License-Identifier: MIT OR Apache-2.0

//! `modalprobe`: build certain/uncertain prompt pairs, run them through the
//! toy model, and analyze activation runs.

mod commands;
mod error;
mod output;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "modalprobe", version, about = "Probe how models encode epistemic modality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn claims into certain/uncertain prompt pairs.
    Pairgen(commands::pairgen::Args),
    /// Run prompt pairs through the deterministic toy transformer.
    ToyRun(commands::toy_run::Args),
    /// Layerwise MSU with bootstrap intervals.
    Msu(commands::msu::Args),
    /// Two-component PCA per layer with inversion detection.
    Pca(commands::pca::Args),
    /// Combine analysis outputs into one HTML report.
    Report(commands::report::Args),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PROBE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("PROBE_THREADS must be a positive integer, got {raw:?}")))?;
    // fails only if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Pairgen(args) => commands::pairgen::run(&args),
        Command::ToyRun(args) => commands::toy_run::run(&args),
        Command::Msu(args) => commands::msu::run(&args),
        Command::Pca(args) => commands::pca::run(&args),
        Command::Report(args) => commands::report::run(&args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
