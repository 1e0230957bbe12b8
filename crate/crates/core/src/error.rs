use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} has zero degree; normalized Laplacian undefined")]
    DegenerateDegree { vertex: usize },

    #[error("graph still disconnected after {attempts} regeneration attempts")]
    Disconnected { attempts: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("clustering produced an empty cluster after all restarts")]
    EmptyCluster,

    #[error("filter interval [0, {interval}] does not cover operator spectrum bound {bound}")]
    IntervalViolation { interval: f64, bound: f64 },

    #[error(
        "kernel `{0}` is defined on eigenvalue indices and cannot be approximated by a polynomial"
    )]
    IndexKernel(String),

    #[error("matrix not invertible within condition bound: {0}")]
    NotInvertible(String),

    #[error("bipartite structure violated: {0}")]
    Bipartite(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
