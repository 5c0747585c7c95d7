//! Reversible classical gates (X, CNOT, Toffoli) acting as basis permutations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    X,
    Cnot,
    Toffoli,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::X => 1,
            GateKind::Cnot => 2,
            GateKind::Toffoli => 3,
        }
    }
}

/// A reversible gate. Controls come first, the target last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub enum Gate {
    X { target: usize },
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    kind: String,
    qubits: Vec<usize>,
}

impl TryFrom<GateRepr> for Gate {
    type Error = Error;
    fn try_from(r: GateRepr) -> Result<Self> {
        let kind = match r.kind.as_str() {
            "X" => GateKind::X,
            "CNOT" => GateKind::Cnot,
            "TOFFOLI" => GateKind::Toffoli,
            other => return Err(Error::InvalidGate(format!("unknown gate kind {other:?}"))),
        };
        Gate::new(kind, &r.qubits)
    }
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        let kind = match g.kind() {
            GateKind::X => "X",
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "TOFFOLI",
        };
        GateRepr {
            kind: kind.to_string(),
            qubits: g.qubits(),
        }
    }
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} takes {} qubits, got {}",
                kind.arity(),
                qubits.len()
            )));
        }
        for i in 0..qubits.len() {
            for j in 0..i {
                if qubits[i] == qubits[j] {
                    return Err(Error::InvalidGate(format!(
                        "qubit {} used twice in {kind:?}",
                        qubits[i]
                    )));
                }
            }
        }
        Ok(match kind {
            GateKind::X => Gate::X { target: qubits[0] },
            GateKind::Cnot => Gate::Cnot {
                control: qubits[0],
                target: qubits[1],
            },
            GateKind::Toffoli => Gate::Toffoli {
                c1: qubits[0],
                c2: qubits[1],
                target: qubits[2],
            },
        })
    }

    pub fn x(target: usize) -> Self {
        Gate::X { target }
    }

    /// Panics on a qubit collision; use [`Gate::new`] for untrusted input.
    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::new(GateKind::Cnot, &[control, target]).expect("distinct CNOT qubits")
    }

    /// Panics on a qubit collision; use [`Gate::new`] for untrusted input.
    pub fn toffoli(c1: usize, c2: usize, target: usize) -> Self {
        Gate::new(GateKind::Toffoli, &[c1, c2, target]).expect("distinct Toffoli qubits")
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::X { .. } => GateKind::X,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Toffoli { .. } => GateKind::Toffoli,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X { target } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Toffoli { c1, c2, target } => vec![c1, c2, target],
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::X { target } | Gate::Cnot { target, .. } | Gate::Toffoli { target, .. } => target,
        }
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().into_iter().max().unwrap_or(0)
    }

    /// Image of a basis state under the gate.
    #[inline]
    pub fn apply(&self, b: u64) -> u64 {
        match *self {
            Gate::X { target } => b ^ (1u64 << target),
            Gate::Cnot { control, target } => b ^ (((b >> control) & 1) << target),
            Gate::Toffoli { c1, c2, target } => b ^ ((((b >> c1) & (b >> c2)) & 1) << target),
        }
    }

    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Self {
        match *self {
            Gate::X { target } => Gate::X {
                target: map(target),
            },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: map(control),
                target: map(target),
            },
            Gate::Toffoli { c1, c2, target } => Gate::Toffoli {
                c1: map(c1),
                c2: map(c2),
                target: map(target),
            },
        }
    }
}

/// `U|b>` for the circuit `U = gates[L-1] ... gates[0]`.
#[inline]
pub fn apply_circuit(gates: &[Gate], b: u64) -> u64 {
    gates.iter().fold(b, |acc, g| g.apply(acc))
}

/// `U^dagger |b>`; every gate is self-inverse.
#[inline]
pub fn apply_inverse(gates: &[Gate], b: u64) -> u64 {
    gates.iter().rev().fold(b, |acc, g| g.apply(acc))
}

/// Checks that every gate fits in `width` qubits.
pub fn check_width(gates: &[Gate], width: usize) -> Result<()> {
    for (i, g) in gates.iter().enumerate() {
        if g.max_qubit() >= width {
            return Err(Error::InvalidGate(format!(
                "gate {i} ({:?}) touches qubit {} outside {width} qubits",
                g.kind(),
                g.max_qubit()
            )));
        }
    }
    Ok(())
}
