//! Command-line front end for `gwcp-core`.
//!
//! [`run`] is the whole program: parse, resolve, execute on a sized thread
//! pool, and write a JSON or CSV report headed by a metadata record.

pub mod commands;
pub mod config;
pub mod output;
pub mod table;

use std::io::Write;
use std::path::PathBuf;

pub use config::{parse_config, RunConfig};
pub use table::{cmd_paper_table, PaperTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(clap::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("self-check failed: {0}")]
    SelfCheckFailed(String),
    #[error(transparent)]
    Core(#[from] gwcp_core::Error),
}

impl CliError {
    /// 1 for failed self-checks, 2 for usage and input errors, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) | CliError::Core(_) => 2,
            CliError::Io { .. } => 3,
            CliError::SelfCheckFailed(_) => 1,
        }
    }
}

macro_rules! core_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
core_error_from!(
    gwcp_core::dist::DistError,
    gwcp_core::tree::TreeError,
    gwcp_core::walk::WalkError,
    gwcp_core::cp::CpError,
    gwcp_core::bounds::BoundsError,
    gwcp_core::mc::McError
);

/// Runs the program on `argv` and returns the process exit code. Reports go
/// to `--out` or `stdout`; diagnostics go to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_config(argv).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cfg.threads)))?;
        let report = pool.install(|| commands::execute(&cfg))?;
        output::emit(&cfg, &report, stdout)?;
        match report.failed_check {
            Some(msg) => Err(CliError::SelfCheckFailed(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            CliError::Clap(e).exit_code()
        }
        Err(e) => {
            let _ = writeln!(stderr, "gwcp: {e}");
            e.exit_code()
        }
    }
}
