use std::io;

use thiserror::Error;

/// Errors raised by the sensing toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape: {0}")]
    InputShape(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerically degenerate: {0}")]
    NumericDegeneracy(String),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
