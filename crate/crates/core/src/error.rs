//! Error taxonomy shared by all core modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("grid must contain at least two cells, got {rows}x{cols}")]
    GridTooSmall { rows: usize, cols: usize },

    #[error("maze graph is not a spanning tree: {reason}")]
    NotATree { reason: String },

    #[error("node {node} is out of range for {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },

    #[error("no path between the entrance and the exit")]
    Disconnected,

    #[error("layout infeasible at anchor {anchor}: {reason}")]
    UnfoldInfeasible { anchor: usize, reason: String },

    #[error("coupling matrix rejected: {0}")]
    BadCouplings(String),

    #[error(
        "step too large: h*maxRate = {product:.4} exceeds 0.1 (h = {h}, maxRate = {max_rate:.4})"
    )]
    StepTooLarge { h: f64, max_rate: f64, product: f64 },

    #[error("density matrix lost positivity at t = {t}: min eigenvalue {min_eig:.3e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error(
        "efficiency estimates diverge at t = {t}: |quadrature - sink population| = {diff:.3e}"
    )]
    ConsistencyFailure { t: f64, diff: f64 },

    #[error("requested z = {z} beyond noise-map coverage {coverage}")]
    NoiseCoverage { z: f64, coverage: f64 },

    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error("postcondition failed: {0}")]
    Postcondition(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed input file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
