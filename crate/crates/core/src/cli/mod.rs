//! Batch front-end: reads a TOML run configuration, dispatches one command
//! and writes CSV artifacts plus a manifest that reproduces the run.

mod commands;
mod config;
mod plots;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use commands::{run, RunOutcome};
pub use config::{parse_curve_toml, validate_config, validate_config_as, Command, ConfigErrors, RunConfig, RunSettings, Setting};

use crate::error::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const IO: i32 = 74;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Validation(_) => exit::VALIDATION,
        Error::Numerical { .. } | Error::Stability { .. } => exit::NUMERICAL,
        Error::Io(_) => exit::IO,
        Error::Replicate { source, .. } => exit_code(source),
    }
}

#[derive(Debug, Parser)]
#[command(name = "tvar", version, about = "TVAR simulation, NLMS tracking and Monte Carlo risk checks")]
pub struct Args {
    /// Command to run; overrides `command` in the config.
    pub command: Option<String>,
    /// Path to the TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo replicates (0 = machine parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write matplotlib scripts next to the CSV files.
    #[arg(long)]
    pub emit_plots: bool,
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    if let Some(name) = &args.command {
        if Command::parse(name).is_none() {
            let known: Vec<&str> = Command::ALL.iter().map(Command::name).collect();
            eprintln!("unknown command '{name}' (expected one of {})", known.join(", "));
            return exit::USAGE;
        }
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return exit::IO;
        }
    };
    let mut cfg = match validate_config_as(&text, args.command.as_deref()) {
        Ok(c) => c,
        Err(errors) => {
            eprint!("{errors}");
            return if errors.unknown_command {
                exit::USAGE
            } else {
                exit::VALIDATION
            };
        }
    };
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(workers) = args.workers {
        cfg.set_workers(workers);
    }
    if let Some(out) = args.out {
        cfg.set_output_dir(out);
    }
    if args.emit_plots {
        cfg.set_emit_plots(true);
    }
    match run(&cfg) {
        Ok(outcome) => {
            print!("{}", outcome.summary.finish());
            log::info!("wrote {} files to {}", outcome.files.len(), cfg.output_dir.display());
            exit::OK
        }
        Err(e) => {
            eprintln!("{e}");
            exit_code(&e)
        }
    }
}
