//! `encost`: analyze clips, fit and evaluate encoding time/energy models,
//! predict encodes and ingest power-meter traces.

macro_rules! out {
    ($($t:tt)*) => { $crate::output::emit(format_args!($($t)*)) };
}

macro_rules! outln {
    () => { out!("\n") };
    ($($t:tt)*) => {{
        out!($($t)*);
        out!("\n");
    }};
}

mod commands;
mod manifest;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{analyze, evaluate, fit, ingest_power, oracle, predict, synth};

#[derive(Debug, Parser)]
#[command(
    name = "encost",
    version,
    about = "Content-aware SVT-AV1 encoding time and energy models"
)]
struct Cli {
    /// Omit timestamps from every output so identical runs produce identical bytes.
    #[arg(long, global = true)]
    reproducible: bool,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute content descriptors for Y4M clips.
    Analyze(analyze::Args),
    /// Fit the time (and energy) model to measured encodes.
    Fit(fit::Args),
    /// Cross-validate one descriptor pairing or the whole descriptor grid.
    Evaluate(evaluate::Args),
    /// Predict encoding time and energy for one encode.
    Predict(predict::Args),
    /// Integrate power traces and check the repetition stopping rule.
    IngestPower(ingest_power::Args),
    /// Per-sequence oracle content factors from a content-blind fit.
    Oracle(oracle::Args),
    /// Write a synthetic records/descriptors dataset.
    Synth(synth::Args),
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Usage = 1,
    PartialFailure = 2,
    DataError = 3,
}

/// A failed command and how it should end the process.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<encost_core::Error> for Failure {
    fn from(e: encost_core::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub type CmdResult = Result<Status, Failure>;

/// Settings shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub reproducible: bool,
}

impl Context {
    /// Current UTC time, or nothing in reproducible mode.
    pub fn timestamp(&self) -> Option<String> {
        (!self.reproducible).then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Status::Usage as u8),
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();

    let ctx = Context {
        reproducible: cli.reproducible,
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(&ctx, a),
        Command::Fit(a) => fit::run(&ctx, a),
        Command::Evaluate(a) => evaluate::run(&ctx, a),
        Command::Predict(a) => predict::run(&ctx, a),
        Command::IngestPower(a) => ingest_power::run(&ctx, a),
        Command::Oracle(a) => oracle::run(&ctx, a),
        Command::Synth(a) => synth::run(&ctx, a),
    };
    let status = match result {
        Ok(status) => status,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            Status::Usage
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            Status::DataError
        }
    };
    ExitCode::from(status as u8)
}
