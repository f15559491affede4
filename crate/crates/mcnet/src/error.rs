use thiserror::Error;

/// Errors produced by graph parsing, dynamics evaluation, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("component {index} = {value} lies outside [0, 1]")]
    OutsideCube { index: usize, value: f64 },

    #[error("component {index} = {value} is not strictly inside (0, 1)")]
    NotInterior { index: usize, value: f64 },

    #[error("component {index} = {value} is not exactly on a face of the cube")]
    NotOnFace { index: usize, value: f64 },

    #[error("graph is disconnected: {0}")]
    Disconnected(&'static str),

    #[error("spectral gap is undefined for a single-node graph")]
    NoSpectralGap,

    #[error("coupling asymmetry is zero; the variance bound does not apply")]
    GammaHatZero,

    #[error("no interior root: {0}")]
    NoInteriorRoot(String),

    /// The per-node quadratic update has no root in (0, 1) for the requested
    /// right-hand side, so the fixed-point iteration cannot continue.
    #[error("node {node}: iteration left the bracket (no root in (0, 1))")]
    BracketLost { node: usize },

    #[error("{method} solver failed after {iterations} iterations (residual {residual:.3e})")]
    SolverFailed {
        method: &'static str,
        iterations: usize,
        residual: f64,
        /// Last iterate, for diagnostics and fallback starts.
        last: Vec<f64>,
    },

    #[error("non-finite state encountered at step {step}")]
    NonFinite { step: usize },

    #[error("residual {residual:.3e} still above tolerance at max time {max_time}")]
    MaxTimeExceeded {
        max_time: f64,
        residual: f64,
        /// Best (lowest-residual) state seen before giving up.
        best: Vec<f64>,
    },

    #[error("hypercube embedding supports at most {max} nodes, got {n}")]
    TooManyNodes { n: usize, max: usize },

    #[error("reference distribution has a zero entry at corner {index}")]
    ZeroReference { index: usize },

    #[error("reference is not a verified steady state: residual {residual:.3e} >= {required:.3e}")]
    UnverifiedSteadyState { residual: f64, required: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
