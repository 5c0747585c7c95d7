//! Reversible verifier circuits: simulation, the witness acceptance
//! operator, and reductions from stoquastic Hamiltonians.

mod decompose;

pub use decompose::{
    controlled_gates, decompose_stoquastic, hamiltonian_to_verifier, hamiltonian_to_verifier_with,
    isometry_operator, mix, x_projector_isometry, zero_projector_isometry, HvVerifier, Isometry,
    PartKind, StoqDecomposition, StoqPart, MAX_SELECTOR_BITS,
};

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gates::{apply_circuit, apply_inverse, check_width, Gate};
use crate::instances::Metadata;
use crate::spectral::top_eigenspace_projection;

pub const CIRCUIT_FORMAT_VERSION: u64 = 1;

/// Largest witness register for which the acceptance operator is assembled.
pub const WITNESS_DENSE_LIMIT: usize = 12;

/// Largest number of `|+>` ancillas that simulation will sum over.
pub const PLUS_SUM_LIMIT: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutBasis {
    /// Project qubit 0 onto `|+>` (stoquastic verifier).
    Plus,
    /// Project qubit 0 onto `|0>` (coherent classical verifier).
    Zero,
}

/// Reversible circuit on `input | witness | zero ancillas | plus ancillas`,
/// accepting when qubit 0 is found in the `out_basis` state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifierCircuit {
    pub version: u64,
    pub n: usize,
    pub n_w: usize,
    pub n_0: usize,
    pub n_plus: usize,
    pub out_basis: OutBasis,
    pub gates: Vec<Gate>,
    #[serde(default, skip_serializing_if = "Metadata::is_empty")]
    pub metadata: Metadata,
}

impl VerifierCircuit {
    pub fn new(
        n: usize,
        n_w: usize,
        n_0: usize,
        n_plus: usize,
        out_basis: OutBasis,
        gates: Vec<Gate>,
    ) -> Result<Self> {
        let c = Self {
            version: CIRCUIT_FORMAT_VERSION,
            n,
            n_w,
            n_0,
            n_plus,
            out_basis,
            gates,
            metadata: Metadata::new(),
        };
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        if self.width() == 0 {
            return Err(Error::InvalidGate("circuit has no qubits".into()));
        }
        if self.width() > 63 {
            return Err(Error::InvalidGate(format!(
                "{} qubits exceed 63",
                self.width()
            )));
        }
        check_width(&self.gates, self.width())
    }

    pub fn width(&self) -> usize {
        self.n + self.n_w + self.n_0 + self.n_plus
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn witness_offset(&self) -> usize {
        self.n
    }

    pub fn zero_offset(&self) -> usize {
        self.n + self.n_w
    }

    pub fn plus_offset(&self) -> usize {
        self.n + self.n_w + self.n_0
    }

    /// Basis index of `|x, a, 0, p>`.
    #[inline]
    pub fn input_index(&self, x: u64, a: u64, p: u64) -> u64 {
        x | (a << self.witness_offset()) | (p << self.plus_offset())
    }

    /// Whether a basis index has the given input and zero ancillas, and if
    /// so its witness and plus parts.
    #[inline]
    fn split_input(&self, b: u64, x: u64) -> Option<(u64, u64)> {
        let in_mask = (1u64 << self.n) - 1;
        let zero_mask = ((1u64 << self.n_0) - 1) << self.zero_offset();
        if b & in_mask != x || b & zero_mask != 0 {
            return None;
        }
        let a = (b >> self.witness_offset()) & ((1u64 << self.n_w) - 1);
        let p = b >> self.plus_offset();
        Some((a, p))
    }

    fn check_input(&self, x: BitString) -> Result<()> {
        if x.n() != self.n {
            return Err(Error::Precondition(format!(
                "input has {} bits, circuit expects {}",
                x.n(),
                self.n
            )));
        }
        Ok(())
    }

    fn check_witness(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != 1usize << self.n_w {
            return Err(Error::Precondition(format!(
                "witness has dimension {}, expected 2^{}",
                psi.len(),
                self.n_w
            )));
        }
        let norm = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!("witness norm {norm} is not 1")));
        }
        Ok(())
    }

    /// Full output state `U |x, psi, 0, +>` (width limited to 26 qubits).
    pub fn simulate(&self, x: BitString, psi: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.check_witness(psi)?;
        if self.width() > 26 {
            return Err(Error::DenseLimit {
                n: self.width(),
                limit: 26,
            });
        }
        let mut out = vec![0.0; 1usize << self.width()];
        let amp = (0.5f64).powf(self.n_plus as f64 / 2.0);
        for (a, &w) in psi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for p in 0..(1u64 << self.n_plus) {
                let b = self.input_index(x.value(), a as u64, p);
                out[apply_circuit(&self.gates, b) as usize] += w * amp;
            }
        }
        Ok(out)
    }

    /// `<psi_in| U^dagger Pi_out U |psi_in>` by summing over the nonzero
    /// components of the input state.
    pub fn acceptance_probability(&self, x: BitString, psi: &[f64]) -> Result<f64> {
        self.check_witness(psi)?;
        let a = self.acceptance_operator(x, Exec::Sequential)?;
        let v = DVector::from_column_slice(psi);
        Ok(v.dot(&(&a * &v)))
    }

    /// The `2^{n_w} x 2^{n_w}` operator `A` with `<psi|A|psi> = Pr(V; x, psi)`:
    /// for `out_basis = zero` it is diagonal (fraction of plus configurations
    /// ending with qubit 0 clear); for `plus` it is `I/2 + B/2` where `B`
    /// collects the pairs of inputs that `U^dagger X_0 U` swaps.
    pub fn acceptance_operator(&self, x: BitString, exec: Exec) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        if self.n_w > WITNESS_DENSE_LIMIT {
            return Err(Error::DenseLimit {
                n: self.n_w,
                limit: WITNESS_DENSE_LIMIT,
            });
        }
        if self.n_plus > PLUS_SUM_LIMIT {
            return Err(Error::Ceiling(format!(
                "{} plus ancillas exceed the simulation limit {PLUS_SUM_LIMIT}",
                self.n_plus
            )));
        }
        let dim = 1usize << self.n_w;
        let configs = 1u64 << self.n_plus;
        let weight = 1.0 / configs as f64;
        let xv = x.value();
        let rows: Vec<Vec<(usize, f64)>> = exec.map_range(dim, |a| {
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut diag_zero = 0u64;
            for p in 0..configs {
                let b = self.input_index(xv, a as u64, p);
                let c = apply_circuit(&self.gates, b);
                match self.out_basis {
                    OutBasis::Zero => {
                        if c & 1 == 0 {
                            diag_zero += 1;
                        }
                    }
                    OutBasis::Plus => {
                        let partner = apply_inverse(&self.gates, c ^ 1);
                        if let Some((a2, _)) = self.split_input(partner, xv) {
                            row.push((a2 as usize, 0.5 * weight));
                        }
                    }
                }
            }
            match self.out_basis {
                OutBasis::Zero => vec![(a, diag_zero as f64 * weight)],
                OutBasis::Plus => {
                    row.push((a, 0.5));
                    row
                }
            }
        });
        let mut m = DMatrix::zeros(dim, dim);
        for (a, row) in rows.into_iter().enumerate() {
            for (c, v) in row {
                m[(a, c)] += v;
            }
        }
        Ok(m)
    }

    /// Largest acceptance probability and a non-negative maximizing witness.
    pub fn max_acceptance(&self, x: BitString) -> Result<(f64, Vec<f64>)> {
        let a = self.acceptance_operator(x, Exec::default())?;
        let (top, v) = top_eigenspace_projection(&a)?;
        Ok((top, v.iter().copied().collect()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("circuit serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let version = value
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Schema {
                field: "version".into(),
                msg: "missing or not an unsigned integer".into(),
            })?;
        if version != CIRCUIT_FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: CIRCUIT_FORMAT_VERSION,
            });
        }
        let c: Self = serde_json::from_value(value).map_err(|e| Error::Schema {
            field: "circuit".into(),
            msg: e.to_string(),
        })?;
        c.check()?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bs0() -> BitString {
        BitString::zeros(0)
    }

    #[test]
    fn x_x_on_plus_accepts() {
        let v =
            VerifierCircuit::new(0, 0, 0, 1, OutBasis::Plus, vec![Gate::x(0), Gate::x(0)]).unwrap();
        let pr = v.acceptance_probability(bs0(), &[1.0]).unwrap();
        assert!((pr - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_ancilla_measured_in_plus_basis() {
        let v = VerifierCircuit::new(0, 0, 1, 0, OutBasis::Plus, vec![]).unwrap();
        assert!((v.acceptance_probability(bs0(), &[1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_basis_is_deterministic_on_basis_witnesses() {
        let v = VerifierCircuit::new(
            1,
            2,
            1,
            0,
            OutBasis::Zero,
            vec![Gate::toffoli(1, 2, 3), Gate::cnot(3, 0)],
        )
        .unwrap();
        for a in 0..4 {
            let mut psi = vec![0.0; 4];
            psi[a] = 1.0;
            let pr = v
                .acceptance_probability(BitString::new(0, 1).unwrap(), &psi)
                .unwrap();
            assert_eq!(pr, if a == 3 { 0.0 } else { 1.0 });
        }
    }

    fn random_circuit(rng: &mut ChaCha8Rng, width: usize, len: usize) -> Vec<Gate> {
        (0..len)
            .map(|_| {
                let mut q: Vec<usize> = (0..width).collect();
                for i in 0..3 {
                    let j = rng.gen_range(i..width);
                    q.swap(i, j);
                }
                match rng.gen_range(0..3) {
                    0 => Gate::x(q[0]),
                    1 => Gate::cnot(q[0], q[1]),
                    _ => Gate::toffoli(q[0], q[1], q[2]),
                }
            })
            .collect()
    }

    /// Independent oracle: dense permutation matrix and explicit projector.
    fn dense_pr(v: &VerifierCircuit, x: u64, psi: &[f64]) -> f64 {
        let w = v.width();
        let dim = 1usize << w;
        let mut u = DMatrix::<f64>::zeros(dim, dim);
        for b in 0..dim {
            let mut c = b as u64;
            for g in &v.gates {
                c = g.apply(c);
            }
            u[(c as usize, b)] = 1.0;
        }
        let mut plus_state = DVector::from_element(1usize << v.n_plus, 1.0);
        plus_state /= plus_state.norm();
        let mut psi_in = DVector::zeros(dim);
        for b in 0..dim {
            let xb = b & ((1 << v.n) - 1);
            let a = (b >> v.n) & ((1 << v.n_w) - 1);
            let z = (b >> (v.n + v.n_w)) & ((1 << v.n_0) - 1);
            let p = b >> (v.n + v.n_w + v.n_0);
            if xb as u64 == x && z == 0 {
                psi_in[b] = psi[a] * plus_state[p];
            }
        }
        let phi = &u * psi_in;
        let out = match v.out_basis {
            OutBasis::Zero => DMatrix::from_row_slice(2, 2, &[1., 0., 0., 0.]),
            OutBasis::Plus => DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
        };
        let big = DMatrix::<f64>::identity(dim / 2, dim / 2).kronecker(&out);
        phi.dot(&(&big * &phi))
    }

    #[test]
    fn matches_dense_unitary_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let basis = if trial % 2 == 0 {
                OutBasis::Plus
            } else {
                OutBasis::Zero
            };
            let gates = random_circuit(&mut rng, 4, 8);
            let v = VerifierCircuit::new(1, 1, 1, 1, basis, gates).unwrap();
            let mut psi: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
            let s = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
            psi.iter_mut().for_each(|a| *a /= s);
            let x = rng.gen_range(0..2u64);
            let pr = v
                .acceptance_probability(BitString::new(x, 1).unwrap(), &psi)
                .unwrap();
            assert!((pr - dense_pr(&v, x, &psi)).abs() < 1e-10);
            let state = v.simulate(BitString::new(x, 1).unwrap(), &psi).unwrap();
            assert!((state.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stoquastic_verifier_max_at_least_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let gates = random_circuit(&mut rng, 5, 10);
            let v = VerifierCircuit::new(0, 2, 2, 1, OutBasis::Plus, gates).unwrap();
            let (pmax, w) = v.max_acceptance(BitString::zeros(0)).unwrap();
            assert!(pmax >= 0.5 - 1e-12);
            assert!(w.iter().all(|&a| a >= -1e-12));
            let pr = v.acceptance_probability(BitString::zeros(0), &w).unwrap();
            assert!((pr - pmax).abs() < 1e-10);
        }
    }

    #[test]
    fn always_accepting() {
        let v =
            VerifierCircuit::new(0, 1, 1, 0, OutBasis::Zero, vec![Gate::x(1), Gate::x(1)]).unwrap();
        let (p, _) = v.max_acceptance(BitString::zeros(0)).unwrap();
        // qubit 0 is the witness: only |0> is accepted
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        let v = VerifierCircuit::new(0, 1, 0, 0, OutBasis::Zero, vec![]).unwrap();
        assert!(v.acceptance_probability(bs0(), &[1.0]).is_err());
        assert!(v.acceptance_probability(bs0(), &[1.0, 1.0]).is_err());
        assert!(VerifierCircuit::new(0, 1, 0, 0, OutBasis::Zero, vec![Gate::x(3)]).is_err());
    }

    #[test]
    fn json_round_trip_and_version() {
        let v =
            VerifierCircuit::new(0, 0, 0, 1, OutBasis::Plus, vec![Gate::x(0), Gate::x(0)]).unwrap();
        let text = v.to_json();
        assert!(text.contains("\"out_basis\": \"plus\""));
        assert_eq!(VerifierCircuit::from_json(&text).unwrap(), v);
        let bad = text.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            VerifierCircuit::from_json(&bad),
            Err(Error::Version { .. })
        ));
    }
}
