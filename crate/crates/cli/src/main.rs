//! `ortho-gconv`: train orthogonal GCNs, probe depth behavior, check the
//! gradient and norm-preservation results numerically, and orthogonalize
//! matrices.

mod commands;
mod config;
mod data;
mod matrix_io;
mod pool;
mod seeds;
mod stats;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ortho-gconv", version, about = "Orthogonal graph convolutions and steadiness diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model over one or more seeds.
    Train(commands::train::TrainArgs),
    /// Depth × variant sweep with steadiness metrics.
    Probe(commands::probe::ProbeArgs),
    /// Numerical checks of the closed-form gradient and orthogonal norm preservation.
    CheckTheorems(commands::check::CheckArgs),
    /// Spectral bounding plus Newton orthogonalization of a CSV matrix.
    Orthogonalize(commands::orthogonalize::OrthogonalizeArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train::run(a).map(|_| true),
        Command::Probe(a) => commands::probe::run(a).map(|_| true),
        Command::CheckTheorems(a) => commands::check::run(a),
        Command::Orthogonalize(a) => commands::orthogonalize::run(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
