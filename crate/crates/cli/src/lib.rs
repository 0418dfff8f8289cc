//! Experiment drivers behind the `fliplab` binary.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod table;

use std::path::Path;

/// Exit code when every check in a run held.
pub const EXIT_OK: i32 = 0;
/// Exit code when a numerical check failed.
pub const EXIT_NUMERIC: i32 = 2;
/// Exit code for invalid configuration or arguments.
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fliplab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use fliplab::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Core(E::NonUnitary { .. } | E::NotConverged { .. }) => EXIT_NUMERIC,
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}

/// Writes `body` to `path`, or to stdout when `path` is `None`.
pub fn emit(body: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
