//! `anura`: run the forms × models benchmark on a frog-call MFCC CSV.

mod commands;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::LevelFilter;

use commands::{PipelineArgs, PredictArgs, TransformArgs};
use settings::ConfigError;

#[derive(Debug, Parser)]
#[command(name = "anura", version, about = "Frog-call species classification benchmark")]
struct Cli {
    /// More progress output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only print errors on standard error.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean, build all data forms, evaluate every model and write the tables.
    Run(PipelineArgs),
    /// Cleaning summary plus describe and correlation tables; no training.
    Stats(PipelineArgs),
    /// Apply a saved transform to a CSV.
    Transform(TransformArgs),
    /// Predict species names for CSV rows with a saved model.
    Predict(PredictArgs),
}

/// Exit status 2 for configuration problems and missing inputs, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        e.is::<ConfigError>() || matches!(e.downcast_ref::<anura_core::Error>(), Some(anura_core::Error::MissingFile(_)))
    });
    if config {
        2
    } else {
        1
    }
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain()
        .any(|e| e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe))
}

/// The error chain, skipping causes whose text the outer message already ends with.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !text.ends_with(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => LevelFilter::Error,
        (false, 0) => LevelFilter::Info,
        (false, 1) => LevelFilter::Debug,
        (false, _) => LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();

    let result = match &cli.command {
        Command::Run(a) => commands::run(a),
        Command::Stats(a) => commands::stats(a),
        Command::Transform(a) => commands::transform(a),
        Command::Predict(a) => commands::predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
