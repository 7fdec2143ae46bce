use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sarcasm_core::models::Variant;
use sarcasm_core::Error;

mod commands;
mod config;

use config::Overrides;

#[derive(Parser)]
#[command(name = "sarcasm", version, about = "Sarcasm detection in conversation context")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML file with run settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus (or self-label raw tweets) and write train/dev/test splits.
    Prepare(Common),
    /// Train an LSTM variant or the SVM baseline.
    Train(Common),
    /// Per-class precision, recall and F1 for a model or stored predictions.
    Eval {
        #[command(flatten)]
        common: Common,
        /// JSONL with `gold` and `label` fields, scored instead of running a model.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Write per-instance predictions.
    Predict(Common),
    /// Write attention heatmaps and the trigger overlap rate.
    Attention(Common),
    /// Compare analytic gradients with finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        only: Option<Variant>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 1,
        Error::Numeric { .. } => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    let load = |c: &Common| config::load(c.config.as_deref(), &c.overrides);
    match command {
        Command::Prepare(c) => commands::prepare(&load(&c)?),
        Command::Train(c) => commands::train_model(&load(&c)?),
        Command::Eval { common, predictions } => commands::evaluate(&load(&common)?, predictions.as_deref()),
        Command::Predict(c) => commands::predict_split(&load(&c)?),
        Command::Attention(c) => commands::attention(&load(&c)?),
        Command::Gradcheck { common, only } => commands::gradcheck(&load(&common)?, only),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
