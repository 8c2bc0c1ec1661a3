//! Command-line front end: `ep`, `eigs`, `petermann`, `spectrum`, `embedcheck`.
//!
//! Exit status: 0 success, 1 invalid input, 2 solver failure, 3 failed check.

mod args;
mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command, DeltaMode};
pub use commands::EMBED_TOLERANCE;
pub use config::Config;
pub use output::{fmt12, fmt_sig, json_twin_path, sidecar_path, RunManifest, Table};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

/// Caps the worker pool when set.
pub const THREADS_ENV: &str = "EPRENORM_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Model(e) => match e {
                Error::NoConvergence { .. }
                | Error::NonPhysicalEp { .. }
                | Error::DegenerateDenominator { .. }
                | Error::PolePseudomode { .. }
                | Error::SingularDenominator { .. } => EXIT_SOLVER,
                Error::OrderCheckFailed { .. } => EXIT_CHECK,
                Error::InvalidParameter { .. }
                | Error::NoMarkovianEp { .. }
                | Error::StepTooLarge { .. }
                | Error::InvalidGrid(_)
                | Error::UnsupportedDimension(_) => EXIT_VALIDATION,
            },
            Self::Config(_) | Self::Usage(_) => EXIT_VALIDATION,
            Self::Io(_) | Self::Json(_) => EXIT_VALIDATION,
            Self::Check(_) => EXIT_CHECK,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let mut ctx = commands::Ctx {
        cfg,
        out: cli.out,
        json: cli.json,
        quiet: cli.quiet,
        stdout,
        stderr,
    };
    match &cli.command {
        Command::Ep(a) => commands::cmd_ep(&mut ctx, a),
        Command::Eigs(a) => commands::cmd_eigs(&mut ctx, a),
        Command::Petermann(a) => commands::cmd_petermann(&mut ctx, a),
        Command::Spectrum(a) => commands::cmd_spectrum(&mut ctx, a),
        Command::Embedcheck(a) => commands::cmd_embedcheck(&mut ctx, a),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}
