//! `degrade`: corrupt frames, run corruption streams, generate paired
//! datasets, verify the finite-alphabet theory checks and summarize traces.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 theory violation.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use degrade_core::DegradationConfig;

mod commands;
mod montage;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "degrade", version, about = "Deterministic visual corruption engine")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// TOML file overriding the built-in operator and schedule constants.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = one per core). Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl GlobalOpts {
    /// Built-in defaults, overridden by `--config` when given.
    pub fn load_config(&self) -> anyhow::Result<DegradationConfig> {
        match &self.config {
            None => Ok(DegradationConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                Ok(DegradationConfig::from_toml_str(&text)?)
            }
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply one degradation to a PNG.
    Corrupt(commands::CorruptArgs),
    /// Corrupt an ordered directory of frames with the Markov-switching schedule.
    Stream(commands::StreamArgs),
    /// Generate a paired dataset from clean / uniform-background frame pairs.
    GenDataset(commands::DatasetArgs),
    /// Run the exact information-theory checks on random finite instances.
    VerifyTheory(commands::TheoryArgs),
    /// Summarize a stream trace.
    Stats(commands::StatsArgs),
}

/// A theory check failed; maps to exit code 3.
#[derive(Debug)]
pub struct TheoryViolation(pub String);

impl std::fmt::Display for TheoryViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "theory violation: {}", self.0)
    }
}

impl std::error::Error for TheoryViolation {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<TheoryViolation>().is_some() {
            return EXIT_VIOLATION;
        }
        if let Some(e) = cause.downcast_ref::<degrade_core::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_VALIDATION };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build_global() {
        log::warn!("could not size the worker pool: {e}");
    }

    let result = match &cli.command {
        Command::Corrupt(a) => commands::corrupt(a, &cli.global),
        Command::Stream(a) => commands::stream(a, &cli.global),
        Command::GenDataset(a) => commands::gen_dataset(a, &cli.global),
        Command::VerifyTheory(a) => commands::verify_theory(a, &cli.global),
        Command::Stats(a) => commands::stats(a, &cli.global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
