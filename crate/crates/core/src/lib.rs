//! Numerical workbench for stoquastic Hamiltonians: local operators, the
//! random-walk verifier, reversible verifier circuits, the clock
//! construction, and trace / replica estimators.

pub mod bits;
pub mod circuits;
pub mod clock;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod gates;
pub mod instances;
pub mod ops;
pub mod prover;
pub mod report;
pub mod sparse;
pub mod spectral;
pub mod walk;

pub use bits::BitString;
pub use error::{Error, Result};
pub use gates::{Gate, GateKind};
pub use ops::{LocalOperator, OperatorSum};

/// Global tolerance for positivity and zero tests.
pub const ETA: f64 = 1e-9;

/// Default ceiling on qubit count for dense assembly.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

/// Dense ceiling, overridable with `STOQ_DENSE_LIMIT`.
pub fn dense_limit() -> usize {
    std::env::var("STOQ_DENSE_LIMIT")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}
