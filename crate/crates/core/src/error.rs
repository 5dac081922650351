//! Crate-wide error type.

use crate::nlp::SolveReport;

/// Errors surfaced by the simulation, planning, and training pipelines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A state component left the evaluable domain (hard set inflated by 50%).
    #[error("domain error: {field} = {value} outside evaluable range [{lo}, {hi}]")]
    Domain {
        field: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An input sequence or disturbance trace does not cover the requested span.
    #[error("span error: {context}: need {needed}, have {available}")]
    Span {
        context: String,
        needed: usize,
        available: usize,
    },

    /// Malformed record in a data file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structural violation of a file or config schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// Invalid configuration value (unknown preset, bad flag combination, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Implicit integration step failed to converge.
    #[error("integration error: collocation Newton stalled after {iterations} iterations, residual {residual:.3e}")]
    Integration { iterations: usize, residual: f64 },

    /// Non-finite value encountered in a numeric kernel.
    #[error("numerical error in {0}")]
    Numerical(String),

    /// Day-ahead planning failed; the solver report is attached for fallback logic.
    #[error("planning error: solver finished with status {status:?} (defect {defect:.3e})", status = .0.status, defect = .0.max_defect)]
    Planning(Box<SolveReport>),

    /// Network training diverged.
    #[error("training error: non-finite loss at epoch {epoch}")]
    Training { epoch: usize },

    /// Tensor/layer shape mismatch.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// One-line machine-parsable form used by the CLI on exit.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Span { .. } => "span",
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::Config(_) => "config",
            Error::Integration { .. } => "integration",
            Error::Numerical(_) => "numerical",
            Error::Planning(_) => "planning",
            Error::Training { .. } => "training",
            Error::Structural(_) => "structural",
            Error::Io(_) => "io",
        }
    }
}
