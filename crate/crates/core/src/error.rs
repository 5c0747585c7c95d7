use thiserror::Error;

/// Errors produced by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("basis string {value:#b} does not fit in {n} qubits")]
    BitStringOutOfRange { value: u64, n: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("dense limit exceeded: {n} qubits > limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("block decomposition residual {residual:e} above tolerance {tol:e}")]
    Reconstruction { residual: f64, tol: f64 },

    #[error("diagonal element <x|P|x> vanishes at {x:#b}")]
    ZeroDiagonal { x: u64 },

    #[error("strings {x:#b} and {y:#b} lie in different blocks")]
    DifferentBlocks { x: u64, y: u64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schema violation at {field}: {msg}")]
    Schema { field: String, msg: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("instance rejected by validation: {0}")]
    Invalid(String),

    #[error("not stoquastic: term {term} has positive off-diagonal entry {value:e}")]
    NotStoquastic { term: usize, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "no convergence after {iterations} iterations (estimate {estimate}, residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("resource ceiling exceeded: {0}")]
    Ceiling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
