//! Batch runner for the whitham-core solvers: configuration parsing,
//! presets, initial-data expressions and artifact output.

pub mod config;
pub mod initial;
pub mod plot;
pub mod presets;
pub mod run;

use std::fmt;

pub use config::{load_config, parse_config, Command, RunConfig};
pub use run::run;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    NonConvergence(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Value of the manifest `status` key.
    pub fn status(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config-error",
            CliError::NonConvergence(_) => "non-convergence",
            CliError::Io(_) => "io-error",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::NonConvergence(m) => write!(f, "non-convergence: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<whitham_core::Error> for CliError {
    fn from(e: whitham_core::Error) -> Self {
        use whitham_core::Error as E;
        match e {
            E::Config(_) | E::Contract(_) | E::Unsupported(_) | E::Parse(_) => CliError::Config(e.to_string()),
            E::NonConvergence(_) | E::StageDivergence { .. } | E::InsufficientResolution(_) => {
                CliError::NonConvergence(e.to_string())
            }
            E::Io(_) => CliError::Io(e.to_string()),
        }
    }
}
