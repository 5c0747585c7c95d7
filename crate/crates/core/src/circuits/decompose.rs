//! Stoquastic Hamiltonians as convex mixtures of conjugated elementary
//! terms, stoquastic isometries, and the resulting verifier circuits.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use super::{OutBasis, VerifierCircuit};
use crate::error::{Error, Result};
use crate::gates::{apply_circuit, apply_inverse, Gate};
use crate::instances::LhMinInstance;
use crate::ops::{LocalOperator, OperatorSum};
use crate::ETA;

/// Cap on the number of `|+>` selector ancillas used for dyadic mixing.
pub const MAX_SELECTOR_BITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PartKind {
    /// `-|0><0|^{(x)k}`
    Z00,
    /// `-X (x) |0><0|^{(x)k-1}`
    X0,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoqPart {
    pub kind: PartKind,
    /// Qubits the elementary term acts on; local bit `i` is `support[i]`.
    pub support: Vec<usize>,
    /// Unnormalized weight `|R_xy|`.
    pub weight: f64,
    /// Normalized weight `p_j = gamma * weight`.
    pub p: f64,
    /// Circuit `U_j` on global qubit indices.
    pub gates: Vec<Gate>,
}

impl StoqPart {
    /// The elementary term `H_j` on `support`.
    pub fn elementary(&self) -> LocalOperator {
        let k = self.support.len();
        let dim = 1usize << k;
        let mut block = vec![0.0; dim * dim];
        match self.kind {
            PartKind::Z00 => block[0] = -1.0,
            PartKind::X0 => {
                block[1] = -1.0;
                block[dim] = -1.0;
            }
        }
        LocalOperator::new(self.support.clone(), block).expect("sorted support")
    }

    /// `U_j H_j U_j^dagger`.
    pub fn conjugated(&self) -> Result<LocalOperator> {
        self.elementary().conjugate_by_circuit(&self.gates)
    }
}

/// `gamma H + beta I = sum_j p_j U_j H_j U_j^dagger`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoqDecomposition {
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    /// Total identity shift `b` with `H = sum_j w_j U_j H_j U_j^dagger + b I`.
    pub shift: f64,
    pub parts: Vec<StoqPart>,
}

impl StoqDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.parts.iter().map(|p| p.weight).sum()
    }

    /// `sum_j p_j U_j H_j U_j^dagger` as an operator sum.
    pub fn reconstruct(&self) -> Result<OperatorSum> {
        let terms = self
            .parts
            .iter()
            .map(StoqPart::conjugated)
            .collect::<Result<Vec<_>>>()?;
        let weights = self.parts.iter().map(|p| p.p).collect();
        OperatorSum::weighted(self.n, terms, weights)
    }

    /// `max |gamma H + beta I - reconstruction|` over dense entries.
    pub fn residual(&self, h: &OperatorSum, limit: usize) -> Result<f64> {
        let target = h.to_dense(limit)? * self.gamma
            + DMatrix::<f64>::identity(1 << self.n, 1 << self.n) * self.beta;
        Ok((target - self.reconstruct()?.to_dense(limit)?).amax())
    }
}

/// X gates writing `x` (local bits) onto `support`.
fn prepare_string(x: usize, support: &[usize]) -> Vec<Gate> {
    (0..support.len())
        .filter(|i| x >> i & 1 == 1)
        .map(|i| Gate::x(support[i]))
        .collect()
}

/// Circuit with `|0^k> -> |x>` and `|10^{k-1}> -> |y>` (local bit 0 first).
fn pair_circuit(x: usize, y: usize, support: &[usize]) -> Vec<Gate> {
    let d = x ^ y;
    let k = support.len();
    let mut gates = Vec::new();
    if d & 1 == 1 {
        for i in 1..k {
            if d >> i & 1 == 1 {
                gates.push(Gate::cnot(support[0], support[i]));
            }
        }
    } else {
        let p = d.trailing_zeros() as usize;
        gates.push(Gate::cnot(support[0], support[p]));
        gates.push(Gate::cnot(support[p], support[0]));
        for i in p + 1..k {
            if d >> i & 1 == 1 {
                gates.push(Gate::cnot(support[p], support[i]));
            }
        }
    }
    gates.extend(prepare_string(x, support));
    gates
}

/// Splits every term into elementary parts after shifting its entries to be
/// non-positive.
pub fn decompose_stoquastic(h: &LhMinInstance) -> Result<StoqDecomposition> {
    let mut parts = Vec::new();
    let mut shift = 0.0;
    for (t, term) in h.terms.iter().enumerate() {
        if let Some(&q) = term.support().iter().find(|&&q| q >= h.n) {
            return Err(Error::QubitOutOfRange { index: q, n: h.n });
        }
        let off = term.max_off_diagonal();
        if off > ETA {
            return Err(Error::NotStoquastic {
                term: t,
                value: off,
            });
        }
        let dim = term.dim();
        let support = term.support();
        if support.is_empty() {
            shift += term.entry(0, 0);
            continue;
        }
        let b = (0..dim).map(|x| term.entry(x, x)).fold(0.0, f64::max);
        shift += b;
        for x in 0..dim {
            let r = term.entry(x, x) - b;
            if r < 0.0 {
                parts.push(StoqPart {
                    kind: PartKind::Z00,
                    support: support.to_vec(),
                    weight: -r,
                    p: 0.0,
                    gates: prepare_string(x, support),
                });
            }
            for y in x + 1..dim {
                let r = 0.5 * (term.entry(x, y) + term.entry(y, x));
                if r < 0.0 {
                    parts.push(StoqPart {
                        kind: PartKind::X0,
                        support: support.to_vec(),
                        weight: -r,
                        p: 0.0,
                        gates: pair_circuit(x, y, support),
                    });
                }
            }
        }
    }
    let total: f64 = parts.iter().map(|p| p.weight).sum();
    if parts.is_empty() || total <= 0.0 {
        return Err(Error::Precondition(
            "Hamiltonian is a multiple of the identity; no parts to mix".into(),
        ));
    }
    let gamma = 1.0 / total;
    parts.iter_mut().for_each(|p| p.p = p.weight * gamma);
    Ok(StoqDecomposition {
        n: h.n,
        gamma,
        beta: -gamma * shift,
        shift,
        parts,
    })
}

/// A stoquastic isometry on `k` input qubits: ancillas `k..k+n_zero` start in
/// `|0>`, the next `n_plus` in `|+>`, and the observable is `X` on `measured`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Isometry {
    pub k: usize,
    pub n_zero: usize,
    pub n_plus: usize,
    pub measured: usize,
    pub gates: Vec<Gate>,
}

impl Isometry {
    pub fn width(&self) -> usize {
        self.k + self.n_zero + self.n_plus
    }
}

/// `W^dagger (X_m (x) I) W = |0><0|^{(x)k}` with Toffolis `T[j, 2k; j+k]`.
pub fn zero_projector_isometry(k: usize) -> Isometry {
    let plus = 2 * k;
    Isometry {
        k,
        n_zero: k,
        n_plus: 1,
        measured: plus,
        gates: (0..k).map(|j| Gate::toffoli(j, plus, j + k)).collect(),
    }
}

/// `W^dagger (X_0 (x) I) W = X (x) |0><0|^{(x)k-1}` with Toffolis
/// `T[j, 0; j+k-1]` for `j = 1..k-1`.
pub fn x_projector_isometry(k: usize) -> Isometry {
    Isometry {
        k,
        n_zero: k.saturating_sub(1),
        n_plus: 0,
        measured: 0,
        gates: (1..k).map(|j| Gate::toffoli(j, 0, j + k - 1)).collect(),
    }
}

/// The `2^k x 2^k` operator `W^dagger (X_m (x) I) W` with ancillas contracted.
pub fn isometry_operator(w: &Isometry) -> DMatrix<f64> {
    let dim = 1usize << w.k;
    let configs = 1u64 << w.n_plus;
    let zero_mask = ((1u64 << w.n_zero) - 1) << w.k;
    let mut m = DMatrix::zeros(dim, dim);
    for a in 0..dim as u64 {
        for p in 0..configs {
            let b = a | (p << (w.k + w.n_zero));
            let partner = apply_inverse(&w.gates, apply_circuit(&w.gates, b) ^ (1 << w.measured));
            if partner & zero_mask == 0 {
                let a2 = partner & ((1u64 << w.k) - 1);
                m[(a as usize, a2 as usize)] += 1.0 / configs as f64;
            }
        }
    }
    m
}

/// Each gate controlled additionally on `control`; Toffolis use the clean
/// ancilla `helper`, which is restored.
pub fn controlled_gates(gates: &[Gate], control: usize, helper: usize) -> Vec<Gate> {
    let mut out = Vec::with_capacity(gates.len() * 3);
    for g in gates {
        match *g {
            Gate::X { target } => out.push(Gate::cnot(control, target)),
            Gate::Cnot { control: c, target } => out.push(Gate::toffoli(control, c, target)),
            Gate::Toffoli { c1, c2, target } => {
                out.push(Gate::toffoli(control, c1, helper));
                out.push(Gate::toffoli(helper, c2, target));
                out.push(Gate::toffoli(control, c1, helper));
            }
        }
    }
    out
}

fn swap(a: usize, b: usize) -> [Gate; 3] {
    [Gate::cnot(a, b), Gate::cnot(b, a), Gate::cnot(a, b)]
}

/// Aligned dyadic blocks `(start, log2 size)` covering `[lo, hi)`.
fn dyadic_blocks(mut lo: u64, hi: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    while lo < hi {
        let mut t = if lo == 0 { 63 } else { lo.trailing_zeros() };
        while t > 0 && (t >= 64 || lo + (1u64 << t) > hi) {
            t -= 1;
        }
        out.push((lo, t));
        lo += 1u64 << t;
    }
    out
}

/// XORs into `flag` the indicator that the selector register lies in `[lo, hi)`.
fn range_indicator(lo: u64, hi: u64, sel: &[usize], flag: usize, temps: &[usize]) -> Vec<Gate> {
    let mut gates = Vec::new();
    for (start, t) in dyadic_blocks(lo, hi) {
        let fixed: Vec<(usize, bool)> = (t as usize..sel.len())
            .map(|i| (sel[i], start >> i & 1 == 1))
            .collect();
        let flips: Vec<Gate> = fixed
            .iter()
            .filter(|(_, b)| !b)
            .map(|&(q, _)| Gate::x(q))
            .collect();
        gates.extend(flips.iter().copied());
        let q: Vec<usize> = fixed.iter().map(|&(q, _)| q).collect();
        match q.len() {
            0 => gates.push(Gate::x(flag)),
            1 => gates.push(Gate::cnot(q[0], flag)),
            2 => gates.push(Gate::toffoli(q[0], q[1], flag)),
            m => {
                let mut chain = vec![Gate::toffoli(q[0], q[1], temps[0])];
                for i in 2..m - 1 {
                    chain.push(Gate::toffoli(temps[i - 2], q[i], temps[i - 1]));
                }
                gates.extend(chain.iter().copied());
                gates.push(Gate::toffoli(temps[m - 3], q[m - 1], flag));
                gates.extend(chain.iter().rev().copied());
            }
        }
        gates.extend(flips);
    }
    gates
}

/// A verifier realizing `Pr(V; psi) = <psi| -alpha H + beta' I |psi>`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HvVerifier {
    pub circuit: VerifierCircuit,
    pub alpha: f64,
    pub beta_prime: f64,
    pub selector_bits: usize,
    /// `sum_j |realized p_j - target p_j|`; zero when the weights are dyadic.
    pub mixing_error: f64,
    pub decomposition: StoqDecomposition,
}

/// Selector bit count and per-part counts out of `2^s`.
fn dyadic_counts(p: &[f64], max_bits: usize) -> (usize, Vec<u64>, f64) {
    let s = (0..=max_bits)
        .find(|&s| p.iter().all(|&x| (x * (1u64 << s) as f64).fract() == 0.0))
        .unwrap_or(max_bits);
    let scale = (1u64 << s) as f64;
    let mut counts: Vec<u64> = p.iter().map(|&x| (x * scale).round() as u64).collect();
    while counts.iter().sum::<u64>() > 1u64 << s {
        let i = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
        counts[i] -= 1;
    }
    let err = p
        .iter()
        .zip(&counts)
        .map(|(&x, &c)| (c as f64 / scale - x).abs())
        .sum();
    (s, counts, err)
}

/// Builds one stoquastic verifier from the decomposition: every part runs
/// `U_j^dagger`, then its isometry, and swaps the measured qubit into qubit 0;
/// `|+>` selector ancillas pick part `j` with probability `gamma' w_j`
/// (`gamma'` the largest power of two with `gamma' sum w <= 1`) and the
/// leftover mass runs a part that always accepts with probability 1/2.
pub fn hamiltonian_to_verifier(h: &LhMinInstance) -> Result<HvVerifier> {
    hamiltonian_to_verifier_with(h, MAX_SELECTOR_BITS)
}

/// [`hamiltonian_to_verifier`] with a lower cap on selector bits.
pub fn hamiltonian_to_verifier_with(h: &LhMinInstance, max_bits: usize) -> Result<HvVerifier> {
    let max_bits = max_bits.min(MAX_SELECTOR_BITS);
    let dec = decompose_stoquastic(h)?;
    let total = dec.total_weight();
    let gamma = (2f64).powi(-(total.log2().ceil() as i32));
    let targets: Vec<f64> = dec.parts.iter().map(|p| p.weight * gamma).collect();
    let (s, counts, mixing_error) = dyadic_counts(&targets, max_bits);
    let filler = (1u64 << s) - counts.iter().sum::<u64>();

    let n_w = h.n;
    let max_zero = dec
        .parts
        .iter()
        .map(|p| match p.kind {
            PartKind::Z00 => p.support.len(),
            PartKind::X0 => p.support.len() - 1,
        })
        .max()
        .unwrap_or(0);
    let any_z00 = dec.parts.iter().any(|p| p.kind == PartKind::Z00);
    let next = std::cell::Cell::new(n_w);
    let alloc = |count: usize| {
        let r: Vec<usize> = (next.get()..next.get() + count).collect();
        next.set(next.get() + count);
        r
    };
    let iso_zero = alloc(max_zero);
    let fresh = alloc((filler > 0) as usize);
    let controlled = s > 0;
    let flag = alloc(controlled as usize);
    let helper = alloc(controlled as usize);
    let temps = alloc(if controlled { s.saturating_sub(2) } else { 0 });
    let n_0 = next.get() - n_w;
    let iso_plus = alloc(any_z00 as usize);
    let sel = alloc(s);
    let width = next.get();
    let n_plus = width - n_w - n_0;
    if width > 63 {
        return Err(Error::Ceiling(format!("verifier needs {width} qubits")));
    }

    let mut bodies: Vec<(u64, Vec<Gate>)> = Vec::new();
    for (part, &count) in dec.parts.iter().zip(&counts) {
        if count == 0 {
            continue;
        }
        let k = part.support.len();
        let iso = match part.kind {
            PartKind::Z00 => zero_projector_isometry(k),
            PartKind::X0 => x_projector_isometry(k),
        };
        let map = |q: usize| {
            if q < k {
                part.support[q]
            } else if q < k + iso.n_zero {
                iso_zero[q - k]
            } else {
                iso_plus[0]
            }
        };
        let mut body: Vec<Gate> = part.gates.iter().rev().copied().collect();
        body.extend(iso.gates.iter().map(|g| g.relabel(map)));
        let m = map(iso.measured);
        if m != 0 {
            body.extend(swap(m, 0));
        }
        bodies.push((count, body));
    }
    if filler > 0 {
        bodies.push((filler, swap(fresh[0], 0).to_vec()));
    }

    let mut gates = Vec::new();
    let mut lo = 0u64;
    for (count, body) in bodies {
        if controlled {
            let ind = range_indicator(lo, lo + count, &sel, flag[0], &temps);
            gates.extend(ind.iter().copied());
            gates.extend(controlled_gates(&body, flag[0], helper[0]));
            gates.extend(ind);
        } else {
            gates.extend(body);
        }
        lo += count;
    }

    let alpha = gamma / 2.0;
    let beta_prime = (1.0 + gamma * dec.shift) / 2.0;
    let mut circuit = VerifierCircuit::new(0, n_w, n_0, n_plus, OutBasis::Plus, gates)?;
    circuit.metadata.insert("alpha".into(), json!(alpha));
    circuit
        .metadata
        .insert("beta_prime".into(), json!(beta_prime));
    circuit.metadata.insert("selector_bits".into(), json!(s));
    circuit
        .metadata
        .insert("mixing_error".into(), json!(mixing_error));
    Ok(HvVerifier {
        circuit,
        alpha,
        beta_prime,
        selector_bits: s,
        mixing_error,
        decomposition: dec,
    })
}

/// The verifier running `a` or `b` on a fresh `|+>` coin, so that
/// `Pr(mix) = (Pr(a) + Pr(b)) / 2`.
pub fn mix(a: &VerifierCircuit, b: &VerifierCircuit) -> Result<VerifierCircuit> {
    if a.n != b.n || a.n_w != b.n_w || a.out_basis != b.out_basis {
        return Err(Error::Precondition(
            "mixed verifiers need equal input, witness and output conventions".into(),
        ));
    }
    let shared = a.n + a.n_w;
    let n_0 = a.n_0 + b.n_0 + 1;
    let helper = shared + a.n_0 + b.n_0;
    let plus0 = shared + n_0;
    let coin = plus0 + a.n_plus + b.n_plus;
    let map = |v: &VerifierCircuit, z_off: usize, p_off: usize| {
        let v = v.clone();
        move |q: usize| {
            if q < shared {
                q
            } else if q < v.plus_offset() {
                z_off + q - shared
            } else {
                p_off + q - v.plus_offset()
            }
        }
    };
    let ma = map(a, shared, plus0);
    let mb = map(b, shared + a.n_0, plus0 + a.n_plus);
    let body = |v: &VerifierCircuit, m: &dyn Fn(usize) -> usize| {
        let mut g: Vec<Gate> = v.gates.iter().map(|g| g.relabel(m)).collect();
        if m(0) != 0 {
            g.extend(swap(m(0), 0));
        }
        g
    };
    let mut gates = vec![Gate::x(coin)];
    gates.extend(controlled_gates(&body(a, &ma), coin, helper));
    gates.push(Gate::x(coin));
    gates.extend(controlled_gates(&body(b, &mb), coin, helper));
    VerifierCircuit::new(a.n, a.n_w, n_0, a.n_plus + b.n_plus + 1, a.out_basis, gates)
}
