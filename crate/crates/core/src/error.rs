use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (max {max})")]
    Index { index: usize, max: usize },

    #[error("overflow evaluating {0}")]
    Overflow(String),

    #[error("series did not converge within {max_terms} terms (z = {z})")]
    NonConvergence { z: f64, max_terms: usize },

    #[error("Newton iteration for LGL node {node} did not converge (N = {degree})")]
    NodeConvergence { node: usize, degree: usize },

    #[error("singular or indefinite system at pivot {0}")]
    Singular(usize),

    #[error("solution diverged at step {step}: nodal magnitude {magnitude:e}")]
    Divergence { step: usize, magnitude: f64 },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("run with tau = {tau} failed: {source}")]
    Study {
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fixed-point iteration did not converge in {0} iterations")]
    FixedPoint(usize),

    #[error("no non-negative root at step {0}")]
    NoRoot(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the failure is a solver blow-up (possibly wrapped by step or study context).
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::Step { source, .. } | Error::Study { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
