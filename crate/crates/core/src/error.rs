use std::path::PathBuf;

use thiserror::Error;

use crate::continuation::ContinuationTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (index order, regime, parameter range).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("eigenvalue tuple is outside the Garding cone of order {order} (margin {margin:e})")]
    Inadmissible { order: usize, margin: f64 },

    #[error("iterate is not admissible at node {node}: cone margin {margin:e}")]
    InadmissibleNode { node: usize, margin: f64 },

    #[error("nonpositive value {value:e} at node {node}")]
    Domain { node: usize, value: f64 },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("surface is not strictly convex at node {node}: min eigenvalue {min_eigenvalue:e}")]
    NotConvex { node: usize, min_eigenvalue: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e}): {reason}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
        history: Vec<f64>,
    },

    #[error("continuation stalled at t = {t} (step floor reached)")]
    ContinuationFailure {
        t: f64,
        trace: ContinuationTrace,
        /// Last admissible iterate, as node values.
        last_iterate: Vec<f64>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV {path:?}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
