//! Clock construction: a verifier circuit becomes a stoquastic 6-local
//! Hamiltonian whose zero-energy states are its computation histories.

use nalgebra::DMatrix;
use serde_json::json;

use crate::bits::BitString;
use crate::circuits::{OutBasis, VerifierCircuit};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gates::Gate;
use crate::instances::{LhMinInstance, Metadata, StoqSatInstance};
use crate::ops::{LocalOperator, OperatorSum};
use crate::spectral::{eigenvalues, DEGENERACY_TOL};

/// Largest total qubit count for which history states are built densely.
pub const HISTORY_LIMIT: usize = 24;

/// Top eigenvalues within this distance of 1 count as an invariant state.
pub const INVARIANT_TOL: f64 = 1e-9;

/// `min(1e-3, 1 / (100 L^3))`.
pub fn default_delta(l: usize) -> f64 {
    (1e-3f64).min(1.0 / (100.0 * (l as f64).powi(3)))
}

/// First-order prediction `delta (1 - max_pr) / (L + 1)` for `lambda_min(H~)`.
pub fn predicted_min_eigenvalue(delta: f64, l: usize, max_pr: f64) -> Result<f64> {
    if !(delta > 0.0) || l == 0 || !(0.0..=1.0).contains(&max_pr) {
        return Err(Error::Precondition(format!(
            "need delta > 0, L >= 1, max_pr in [0, 1]; got {delta}, {l}, {max_pr}"
        )));
    }
    Ok(delta * (1.0 - max_pr) / (l as f64 + 1.0))
}

/// The projector families of the clock construction. Work registers occupy
/// qubits `0..W` in circuit order; clock qubit `j` is qubit `W + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockInstance {
    pub circuit: VerifierCircuit,
    pub x: BitString,
    pub init_x: Vec<LocalOperator>,
    pub init_0: Vec<LocalOperator>,
    pub init_plus: Vec<LocalOperator>,
    pub prop: Vec<LocalOperator>,
    pub meas: LocalOperator,
}

/// A normalized computation history.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryState {
    pub witness: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub acceptance: f64,
    pub meas_expectation: f64,
}

/// `a (x) |c0 c1><c0 c1|` plus `I (x) |d0 d1><d0 d1|` on `(q, clock_a, clock_b)`,
/// with `a` a 2x2 block on `q` (local bit 0).
fn three_qubit(
    q: usize,
    ca: usize,
    cb: usize,
    a: [f64; 4],
    on: (usize, usize),
    id: (usize, usize),
) -> LocalOperator {
    let mut block = vec![0.0; 64];
    for r in 0..8usize {
        for c in 0..8usize {
            let (rq, rc) = (r & 1, (r >> 1 & 1, r >> 2 & 1));
            let (cq, cc) = (c & 1, (c >> 1 & 1, c >> 2 & 1));
            if rc != cc {
                continue;
            }
            let mut v = 0.0;
            if rc == on {
                v += a[rq * 2 + cq];
            }
            if rc == id && rq == cq {
                v += 1.0;
            }
            block[r * 8 + c] = v;
        }
    }
    LocalOperator::new(vec![q, ca, cb], block).expect("ordered support")
}

impl ClockInstance {
    pub fn compile(circuit: &VerifierCircuit, x: BitString) -> Result<Self> {
        if circuit.is_empty() {
            return Err(Error::Precondition(
                "clock construction needs L >= 1 gates".into(),
            ));
        }
        if x.n() != circuit.n {
            return Err(Error::Precondition(format!(
                "input has {} bits, circuit expects {}",
                x.n(),
                circuit.n
            )));
        }
        let w = circuit.width();
        let l = circuit.len();
        if w + l + 2 > 63 {
            return Err(Error::Ceiling(format!("{} qubits exceed 63", w + l + 2)));
        }
        let clock = |j: usize| w + j;
        let half = 0.5;
        let init_x = (0..circuit.n)
            .map(|i| {
                let a = if x.bit(i) {
                    [0., 0., 0., 1.]
                } else {
                    [1., 0., 0., 0.]
                };
                three_qubit(i, clock(0), clock(1), a, (1, 0), (1, 1))
                    .with_tag(format!("init_x_{i}"))
            })
            .collect();
        let init_0 = (0..circuit.n_0)
            .map(|i| {
                three_qubit(
                    circuit.zero_offset() + i,
                    clock(0),
                    clock(1),
                    [1., 0., 0., 0.],
                    (1, 0),
                    (1, 1),
                )
                .with_tag(format!("init_0_{i}"))
            })
            .collect();
        let init_plus = (0..circuit.n_plus)
            .map(|i| {
                three_qubit(
                    circuit.plus_offset() + i,
                    clock(0),
                    clock(1),
                    [half; 4],
                    (1, 0),
                    (1, 1),
                )
                .with_tag(format!("init_plus_{i}"))
            })
            .collect();
        let prop = circuit
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| {
                prop_projector(g, i + 1, l, w).map(|p| p.with_tag(format!("prop_{}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let out = match circuit.out_basis {
            OutBasis::Plus => [half; 4],
            OutBasis::Zero => [1., 0., 0., 0.],
        };
        let meas = three_qubit(0, clock(l), clock(l + 1), out, (1, 0), (0, 0)).with_tag("meas");
        Ok(Self {
            circuit: circuit.clone(),
            x,
            init_x,
            init_0,
            init_plus,
            prop,
            meas,
        })
    }

    pub fn work_qubits(&self) -> usize {
        self.circuit.width()
    }

    pub fn steps(&self) -> usize {
        self.circuit.len()
    }

    /// Total qubit count `N = W + L + 2`.
    pub fn n_total(&self) -> usize {
        self.work_qubits() + self.steps() + 2
    }

    pub fn clock_qubit(&self, j: usize) -> usize {
        self.work_qubits() + j
    }

    /// Basis index of the clock string `1^{j+1} 0^{L-j+1}`.
    pub fn clock_state(&self, j: usize) -> u64 {
        ((1u64 << (j + 1)) - 1) << self.work_qubits()
    }

    /// Init and propagation projectors (those defining `H^(6)`).
    pub fn circuit_projectors(&self) -> Vec<LocalOperator> {
        let mut out = self.init_x.clone();
        out.extend(self.init_0.iter().cloned());
        out.extend(self.init_plus.iter().cloned());
        out.extend(self.prop.iter().cloned());
        out
    }

    /// `M = n + n_0 + n_plus + L + 1` projectors including the measurement.
    pub fn all_projectors(&self) -> Vec<LocalOperator> {
        let mut out = self.circuit_projectors();
        out.push(self.meas.clone());
        out
    }

    fn metadata(&self) -> Metadata {
        let mut m = Metadata::new();
        m.insert(
            "source_circuit".into(),
            serde_json::to_value(&self.circuit).expect("circuit serializes"),
        );
        m.insert("input".into(), json!(self.x));
        m.insert("clock_steps".into(), json!(self.steps()));
        m
    }

    /// `H^(6) = sum (I - Pi)` over init and propagation projectors.
    pub fn hamiltonian(&self) -> LhMinInstance {
        let terms = self
            .circuit_projectors()
            .iter()
            .map(LocalOperator::complement)
            .collect();
        let mut h = LhMinInstance::new(self.n_total(), terms);
        h.metadata = self.metadata();
        h
    }

    /// `H~ = H^(6) + delta (I - Pi^meas)`.
    pub fn perturbed_hamiltonian(&self, delta: f64) -> Result<LhMinInstance> {
        if !(delta > 0.0) {
            return Err(Error::Precondition(format!(
                "delta {delta} must be positive"
            )));
        }
        let mut h = self.hamiltonian();
        h.terms
            .push(self.meas.complement().scaled(delta).with_tag("meas"));
        h.metadata.insert("delta".into(), json!(delta));
        Ok(h)
    }

    /// `sum_j U_j..U_1 |x, psi, 0, +> (x) |clock j> / sqrt(L+1)`, with the
    /// measurement expectation checked against `1 - (1 - Pr)/(L+1)`.
    pub fn history_state(&self, psi: &[f64]) -> Result<HistoryState> {
        let n_total = self.n_total();
        if n_total > HISTORY_LIMIT {
            return Err(Error::DenseLimit {
                n: n_total,
                limit: HISTORY_LIMIT,
            });
        }
        let c = &self.circuit;
        let acceptance = c.acceptance_probability(self.x, psi)?;
        let l = self.steps();
        let norm = 1.0 / ((l + 1) as f64).sqrt() * (0.5f64).powf(c.n_plus as f64 / 2.0);
        let mut amplitudes = vec![0.0; 1usize << n_total];
        for (a, &w) in psi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for p in 0..(1u64 << c.n_plus) {
                let mut b = c.input_index(self.x.value(), a as u64, p);
                for j in 0..=l {
                    if j > 0 {
                        b = c.gates[j - 1].apply(b);
                    }
                    amplitudes[(b | self.clock_state(j)) as usize] += w * norm;
                }
            }
        }
        let meas = OperatorSum::new(n_total, vec![self.meas.clone()])?;
        let mut out = vec![0.0; amplitudes.len()];
        meas.matvec_with(Exec::default(), &amplitudes, &mut out);
        let meas_expectation: f64 = amplitudes.iter().zip(&out).map(|(a, b)| a * b).sum();
        let predicted = 1.0 - (1.0 - acceptance) / (l as f64 + 1.0);
        if (meas_expectation - predicted).abs() > 1e-10 {
            return Err(Error::Invalid(format!(
                "measurement expectation {meas_expectation} differs from {predicted}"
            )));
        }
        Ok(HistoryState {
            witness: psi.to_vec(),
            amplitudes,
            acceptance,
            meas_expectation,
        })
    }

    /// `H^(6)` restricted to legal clock strings, basis `(work config, j)`
    /// ordered as `j * 2^W + config`.
    pub fn legal_sector_matrix(&self, limit: usize) -> Result<DMatrix<f64>> {
        let w = self.work_qubits();
        let l = self.steps();
        let dim = (1usize << w) * (l + 1);
        if dim > 1usize << limit {
            return Err(Error::DenseLimit { n: w, limit });
        }
        let h = self.hamiltonian().hamiltonian()?;
        let index = |k: usize| (k & ((1 << w) - 1)) as u64 | self.clock_state(k >> w);
        let mut m = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for (y, v) in h.row(index(r)) {
                let config = (y & ((1u64 << w) - 1)) as usize;
                let clock = y >> w;
                // legal strings are closed under the Hamiltonian
                let j = (clock + 1).trailing_zeros() as usize - 1;
                debug_assert_eq!(self.clock_state(j), clock << w);
                m[(r, j * (1 << w) + config)] = v;
            }
        }
        Ok(m)
    }

    /// Exports `{init, prop, meas}` as stoquastic 6-SAT. `epsilon` defaults
    /// to `M (1 - lambda_max(G))`; when `G` has an invariant state it is
    /// taken from the largest eigenvalue below the invariant level instead.
    pub fn export_6sat(&self, epsilon: Option<f64>, dense_limit: usize) -> Result<StoqSatInstance> {
        let projectors = self.all_projectors();
        let m = projectors.len();
        let mut inst = StoqSatInstance::new(self.n_total(), None, projectors);
        inst.metadata = self.metadata();
        match epsilon {
            Some(e) => {
                inst.epsilon = Some(e);
                inst.metadata
                    .insert("epsilon_mode".into(), json!("supplied"));
            }
            None => {
                if self.n_total() > dense_limit {
                    return Err(Error::DenseLimit {
                        n: self.n_total(),
                        limit: dense_limit,
                    });
                }
                let g = crate::walk::build_g(&inst)?;
                let eigs = eigenvalues(&g.to_dense(dense_limit)?);
                let top = *eigs.last().expect("nonempty spectrum");
                let (level, mode) = if top < 1.0 - INVARIANT_TOL {
                    (top, "spectral")
                } else {
                    let below = eigs
                        .iter()
                        .rev()
                        .find(|&&e| e < top - DEGENERACY_TOL)
                        .copied()
                        .unwrap_or(0.0);
                    (below, "spectral-gap")
                };
                let e = (m as f64 * (1.0 - level)).min(1.0);
                inst.epsilon = Some(e);
                inst.metadata.insert("epsilon_mode".into(), json!(mode));
                inst.metadata.insert("lambda_max".into(), json!(top));
            }
        }
        Ok(inst)
    }
}

/// The propagation projector for gate `j` (1-based) of `l`, on the gate
/// qubits and clock qubits `j-1, j, j+1`. The `|000>` pattern is dropped at
/// `j = 1` and `|111>` at `j = L`, which pins clock 0 to 1 and clock L+1 to 0.
fn prop_projector(gate: &Gate, j: usize, l: usize, w: usize) -> Result<LocalOperator> {
    let mut support = gate.qubits();
    support.sort_unstable();
    let g = support.len();
    support.extend([w + j - 1, w + j, w + j + 1]);
    let local = |q: usize| {
        support
            .iter()
            .position(|&s| s == q)
            .expect("gate qubit in support")
    };
    let lg = gate.relabel(local);
    let dim = 1usize << support.len();
    let mut block = vec![0.0; dim * dim];
    let mask = (1usize << g) - 1;
    for c in 0..dim {
        let s = c & mask;
        let (a, b, d) = (c >> g & 1, c >> (g + 1) & 1, c >> (g + 2) & 1);
        match (a, b, d) {
            (1, _, 0) => {
                block[c * dim + c] += 0.5;
                let t = lg.apply(s as u64) as usize;
                let r = t | ((1 - b) << (g + 1)) | (1 << g);
                block[r * dim + c] += 0.5;
            }
            (0, 0, 0) if j > 1 => block[c * dim + c] = 1.0,
            (1, 1, 1) if j < l => block[c * dim + c] = 1.0,
            _ => {}
        }
    }
    LocalOperator::new(support, block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigencount_below, gap_of, spectrum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xx() -> VerifierCircuit {
        VerifierCircuit::new(0, 0, 0, 1, OutBasis::Plus, vec![Gate::x(0), Gate::x(0)]).unwrap()
    }

    /// `Pr = 1/2`: the output is a fresh `|0>` measured in the plus basis.
    fn half() -> VerifierCircuit {
        VerifierCircuit::new(
            0,
            1,
            1,
            0,
            OutBasis::Plus,
            vec![Gate::cnot(0, 1), Gate::cnot(0, 1)],
        )
        .unwrap()
    }

    fn dense(h: &LhMinInstance) -> DMatrix<f64> {
        h.hamiltonian().unwrap().to_dense(14).unwrap()
    }

    #[test]
    fn xx_clock_has_zero_ground_energy() {
        let c = ClockInstance::compile(&xx(), BitString::zeros(0)).unwrap();
        assert_eq!(c.n_total(), 5);
        let e = eigenvalues(&dense(&c.hamiltonian()));
        assert!(e[0].abs() < 1e-10);
        assert_eq!(e.iter().filter(|&&v| v < 1e-8).count(), 1);
    }

    #[test]
    fn projectors_are_valid() {
        let v = VerifierCircuit::new(
            1,
            1,
            1,
            1,
            OutBasis::Zero,
            vec![Gate::toffoli(0, 1, 2), Gate::cnot(3, 0), Gate::x(2)],
        )
        .unwrap();
        let c = ClockInstance::compile(&v, BitString::new(1, 1).unwrap()).unwrap();
        assert_eq!(c.all_projectors().len(), 1 + 1 + 1 + 3 + 1);
        for p in c.all_projectors() {
            let chk = p.projector_check(1e-12);
            assert!(chk.ok, "{} {:?}", p.tag(), chk);
            assert!(p.min_entry() >= 0.0);
            assert!(p.locality() <= 6);
        }
    }

    #[test]
    fn ground_space_is_history_states() {
        let c = ClockInstance::compile(&half(), BitString::zeros(0)).unwrap();
        let h = c.hamiltonian().hamiltonian().unwrap();
        let e = spectrum(&h, 14).unwrap();
        let gap = gap_of(&e);
        assert!(e[0].abs() < 1e-10);
        assert_eq!(eigencount_below(&h, gap / 2.0, 14).unwrap(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let hist = c.history_state(&[a.cos(), a.sin()]).unwrap();
            let mut out = vec![0.0; hist.amplitudes.len()];
            h.matvec(&hist.amplitudes, &mut out);
            assert!(out.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-10);
            let norm: f64 = hist.amplitudes.iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_expectation() {
        let c = ClockInstance::compile(&xx(), BitString::zeros(0)).unwrap();
        assert!((c.history_state(&[1.0]).unwrap().meas_expectation - 1.0).abs() < 1e-12);
        let c = ClockInstance::compile(&half(), BitString::zeros(0)).unwrap();
        let hist = c.history_state(&[1.0, 0.0]).unwrap();
        assert!((hist.acceptance - 0.5).abs() < 1e-12);
        assert!((hist.meas_expectation - 5.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn perturbation_theory() {
        let c = ClockInstance::compile(&xx(), BitString::zeros(0)).unwrap();
        let e = eigenvalues(&dense(&c.perturbed_hamiltonian(1e-3).unwrap()));
        assert!(e[0].abs() < 1e-12);

        let fixed =
            VerifierCircuit::new(0, 0, 1, 0, OutBasis::Plus, vec![Gate::x(0), Gate::x(0)]).unwrap();
        let c = ClockInstance::compile(&fixed, BitString::zeros(0)).unwrap();
        let resid = |d: f64| {
            let e = eigenvalues(&dense(&c.perturbed_hamiltonian(d).unwrap()))[0];
            (e - predicted_min_eigenvalue(d, 2, 0.5).unwrap()).abs()
        };
        let (r1, r2) = (resid(1e-3), resid(5e-4));
        assert!((r1 / r2) > 3.5 && (r1 / r2) < 4.5, "{r1} {r2}");
        assert!(c.perturbed_hamiltonian(0.0).is_err());
    }

    #[test]
    fn predictions() {
        assert_eq!(predicted_min_eigenvalue(1e-3, 4, 1.0).unwrap(), 0.0);
        assert!((predicted_min_eigenvalue(1e-3, 2, 0.5).unwrap() - 1.6667e-4).abs() < 1e-8);
        assert!((predicted_min_eigenvalue(1e-4, 5, 2.0 / 3.0).unwrap() - 5.556e-6).abs() < 1e-9);
        assert_eq!(default_delta(1), 1e-3);
        assert_eq!(default_delta(10), 1e-5);
    }

    #[test]
    fn rejects_empty_circuit() {
        let v = VerifierCircuit::new(0, 1, 0, 0, OutBasis::Zero, vec![]).unwrap();
        assert!(ClockInstance::compile(&v, BitString::zeros(0)).is_err());
    }

    #[test]
    fn legal_sector_is_circuit_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut reference: Option<Vec<f64>> = None;
        for _ in 0..4 {
            let gates = (0..3)
                .map(|_| {
                    let a = rng.gen_range(0..3);
                    let b = (a + rng.gen_range(1..3)) % 3;
                    Gate::cnot(a, b)
                })
                .collect();
            let v = VerifierCircuit::new(0, 1, 1, 1, OutBasis::Plus, gates).unwrap();
            let c = ClockInstance::compile(&v, BitString::zeros(0)).unwrap();
            let e = eigenvalues(&c.legal_sector_matrix(14).unwrap());
            if let Some(r) = &reference {
                let d = r
                    .iter()
                    .zip(&e)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(d < 1e-8);
            } else {
                reference = Some(e);
            }
        }
    }

    #[test]
    fn export_counts_and_epsilon() {
        let v = VerifierCircuit::new(
            0,
            1,
            1,
            0,
            OutBasis::Zero,
            vec![Gate::cnot(1, 0), Gate::cnot(1, 0)],
        )
        .unwrap();
        let c = ClockInstance::compile(&v, BitString::zeros(0)).unwrap();
        let s = c.export_6sat(None, 14).unwrap();
        assert_eq!(s.m(), 0 + 1 + 0 + 2 + 1);
        assert!(s.validate().is_clean());
        assert_eq!(s.metadata["epsilon_mode"], "spectral-gap");

        // output forced to |1>: never accepts
        let v = VerifierCircuit::new(
            0,
            1,
            1,
            0,
            OutBasis::Zero,
            vec![Gate::x(0), Gate::cnot(1, 0)],
        )
        .unwrap();
        let v = VerifierCircuit {
            n_w: 0,
            n_0: 2,
            ..v
        };
        let c = ClockInstance::compile(&v, BitString::zeros(0)).unwrap();
        let s = c.export_6sat(None, 14).unwrap();
        assert_eq!(s.metadata["epsilon_mode"], "spectral");
        assert!(s.metadata["lambda_max"].as_f64().unwrap() < 1.0);
        let sup = c.export_6sat(Some(0.25), 0).unwrap();
        assert_eq!(sup.epsilon, Some(0.25));
        assert!(c.export_6sat(None, 3).is_err());
    }
}
