use thiserror::Error;

/// Errors raised by the solvers and diagnostics in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{0}")]
    NonConvergence(Box<crate::travel::NonConvergence>),

    #[error("stage iteration did not converge after {iterations} iterations (increment {increment:.3e})")]
    StageDivergence { iterations: usize, increment: f64 },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
