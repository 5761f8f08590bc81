//! Batch front end: parses system files, runs the checks and pipelines of
//! `ahdiag-core`, and writes a text report, a JSON report and export files.

pub mod commands;
pub mod format;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use format::{parse_file, parse_str, serialize, Model};
pub use report::{Report, Section, Status};

pub const OUT_ENV: &str = "AHDIAG_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dangling reference: {0}")]
    Dangling(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Parameter(_) => 2,
            CliError::Io(_) | CliError::Schema(_) | CliError::Dangling(_) => 3,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> CliError {
        match self {
            CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
            CliError::Dangling(m) => CliError::Dangling(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

impl From<ahdiag_core::Error> for CliError {
    fn from(e: ahdiag_core::Error) -> Self {
        use ahdiag_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::DeltaBound { .. } | E::Precondition(_) => CliError::Parameter(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ahdiag", version, about = "Eigenvalue-pattern checks, perturbations and groupoid stages for AH systems")]
pub struct Cli {
    /// Output directory for the JSON report and export files
    /// (default: $AHDIAG_OUT; nothing is written when neither is set).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the text report.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unitality, injectivity, maximal homogeneity and descent of every
    /// diagonal form; the counting conditions of the system.
    Check { file: PathBuf },
    /// Perturb a diagonal form to a surjective, maximally homogeneous one.
    Perturb {
        file: PathBuf,
        #[arg(long)]
        form: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        rho: Option<String>,
        /// Bump size for the final distinctness repair.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Approximate-intertwining test for the pair in `[generators]`.
    Intertwine {
        file: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Build a groupoid stage and report its laws, orbits and density.
    Groupoid {
        file: PathBuf,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        /// Use the first K declared samples of each component.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        epsilon: Option<String>,
        /// Viewing level for orbits (default: the base level).
        #[arg(long)]
        view: Option<usize>,
    },
    /// Write DOT and/or CSV exports.
    Export {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Write a system file for one of the built-in example families.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 1)]
        per_level: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Depth of the intertwining schedule.
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Print the file in normal form.
    Fmt { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    GoodearlHalf,
    GoodearlDense,
    GoodearlStuck,
    Villadsen1,
    Villadsen2,
    Dynamics,
    Thirds,
    Pipeline,
    Schedule,
    Violation,
}

/// Runs one invocation; returns the exit code.
pub fn run<I, T>(args: I, env_out: Option<PathBuf>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    let out_dir = cli.out.clone().or(env_out);
    match commands::dispatch(&cli.command, out_dir.as_deref()) {
        Ok(commands::Outcome::Report(report)) => {
            let body = if cli.json { report.json() } else { report.text() };
            let _ = stdout.write_all(body.as_bytes());
            match report.status {
                Status::Fail => 1,
                _ => 0,
            }
        }
        Ok(commands::Outcome::Text(t)) => {
            let _ = stdout.write_all(t.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
