//! Local real operators, their weighted sums, and matrix-free access to the
//! assembled `2^n x 2^n` matrix.

mod projector;

pub use projector::{
    amplitude_ratio, block_decompose, projector_check, projector_from_components, BlockComponent,
    BlockDecomposition, ProjectorCheck,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bits::{gather, scatter, support_mask, BitString, MAX_BASIS_QUBITS};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gates::Gate;
use crate::sparse::CsrMatrix;

/// Default cap on the support size of a single term.
pub const DEFAULT_MAX_LOCALITY: usize = 6;

/// A real operator acting on a few qubits: `block` is the dense
/// `2^k x 2^k` matrix (row-major) with local bit `i` on qubit `support[i]`.
/// An empty support is a scalar multiple of the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalOperator {
    support: Vec<usize>,
    block: Vec<f64>,
    #[serde(default)]
    tag: String,
}

impl LocalOperator {
    /// Builds a term; the support must be strictly increasing and the block
    /// square with side `2^support.len()`.
    pub fn new(support: Vec<usize>, block: Vec<f64>) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidOperator(format!(
                "support {support:?} is not strictly increasing"
            )));
        }
        if support.len() > 16 {
            return Err(Error::InvalidOperator(format!(
                "support of {} qubits is too wide for a dense block",
                support.len()
            )));
        }
        let dim = 1usize << support.len();
        if block.len() != dim * dim {
            return Err(Error::InvalidOperator(format!(
                "block has {} entries, expected {}",
                block.len(),
                dim * dim
            )));
        }
        if let Some(v) = block.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidOperator(format!("non-finite entry {v}")));
        }
        Ok(Self {
            support,
            block,
            tag: String::new(),
        })
    }

    /// Like [`LocalOperator::new`] but accepts an unordered support and
    /// permutes the block accordingly.
    pub fn from_unsorted(support: &[usize], block: Vec<f64>) -> Result<Self> {
        let k = support.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| support[i]);
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return Self::new(support.to_vec(), block);
        }
        let dim = 1usize << k;
        if block.len() != dim * dim {
            return Err(Error::InvalidOperator("block size mismatch".into()));
        }
        let sorted: Vec<usize> = order.iter().map(|&i| support[i]).collect();
        // new local bit j carries old local bit order[j]
        let remap = |new: usize| -> usize {
            let mut old = 0;
            for (j, &o) in order.iter().enumerate() {
                old |= ((new >> j) & 1) << o;
            }
            old
        };
        let mut out = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                out[r * dim + c] = block[remap(r) * dim + remap(c)];
            }
        }
        Self::new(sorted, out)
    }

    pub fn identity(support: Vec<usize>) -> Result<Self> {
        let dim = 1usize << support.len();
        let mut block = vec![0.0; dim * dim];
        for i in 0..dim {
            block[i * dim + i] = 1.0;
        }
        Self::new(support, block)
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            support: Vec::new(),
            block: vec![value],
            tag: String::new(),
        }
    }

    /// `|v><v|` on the given support.
    pub fn rank_one(support: Vec<usize>, v: &[f64]) -> Result<Self> {
        let dim = v.len();
        let mut block = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                block[r * dim + c] = v[r] * v[c];
            }
        }
        Self::new(support, block)
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn block(&self) -> &[f64] {
        &self.block
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn locality(&self) -> usize {
        self.support.len()
    }

    pub fn dim(&self) -> usize {
        1usize << self.support.len()
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.block[r * self.dim() + c]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.block.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.block.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest off-diagonal entry (`-inf` for a 1x1 block).
    pub fn max_off_diagonal(&self) -> f64 {
        let dim = self.dim();
        let mut m = f64::NEG_INFINITY;
        for r in 0..dim {
            for c in 0..dim {
                if r != c {
                    m = m.max(self.block[r * dim + c]);
                }
            }
        }
        m
    }

    pub fn symmetry_residual(&self) -> f64 {
        let dim = self.dim();
        let mut m = 0.0f64;
        for r in 0..dim {
            for c in 0..r {
                m = m.max((self.block[r * dim + c] - self.block[c * dim + r]).abs());
            }
        }
        m
    }

    pub fn is_diagonal(&self) -> bool {
        let dim = self.dim();
        (0..dim).all(|r| (0..dim).all(|c| r == c || self.block[r * dim + c] == 0.0))
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let dim = self.dim();
        DMatrix::from_row_slice(dim, dim, &self.block)
    }

    pub fn from_matrix(support: Vec<usize>, m: &DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        let mut block = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                block.push(m[(r, c)]);
            }
        }
        Self::new(support, block)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            support: self.support.clone(),
            block: self.block.iter().map(|v| v * s).collect(),
            tag: self.tag.clone(),
        }
    }

    /// `I - self` on the same support.
    pub fn complement(&self) -> Self {
        let dim = self.dim();
        let mut block: Vec<f64> = self.block.iter().map(|v| -v).collect();
        for i in 0..dim {
            block[i * dim + i] += 1.0;
        }
        Self {
            support: self.support.clone(),
            block,
            tag: self.tag.clone(),
        }
    }

    /// Re-expresses the operator on a larger support (tensoring identity on
    /// the new qubits). `support` must be strictly increasing and contain
    /// the current support.
    pub fn embed(&self, support: &[usize]) -> Result<Self> {
        let pos: Vec<usize> = self
            .support
            .iter()
            .map(|q| {
                support.iter().position(|s| s == q).ok_or_else(|| {
                    Error::InvalidOperator(format!("qubit {q} missing from embedding support"))
                })
            })
            .collect::<Result<_>>()?;
        let dim = 1usize << support.len();
        let inner_mask: usize = pos.iter().fold(0, |m, &p| m | (1 << p));
        let mut block = vec![0.0; dim * dim];
        for r in 0..dim {
            let rl = pos
                .iter()
                .enumerate()
                .fold(0usize, |a, (i, &p)| a | (((r >> p) & 1) << i));
            for c in 0..dim {
                if (r ^ c) & !inner_mask != 0 {
                    continue;
                }
                let cl = pos
                    .iter()
                    .enumerate()
                    .fold(0usize, |a, (i, &p)| a | (((c >> p) & 1) << i));
                block[r * dim + c] = self.entry(rl, cl);
            }
        }
        let mut out = Self::new(support.to_vec(), block)?;
        out.tag = self.tag.clone();
        Ok(out)
    }

    /// Returns `U A U^dagger` for the reversible circuit `U`. The result is
    /// supported on the union of the term's support and the gate qubits;
    /// entries are permuted, never combined, so the map is exact.
    pub fn conjugate_by_circuit(&self, gates: &[Gate]) -> Result<Self> {
        let mut support = self.support.clone();
        for g in gates {
            support.extend(g.qubits());
        }
        support.sort_unstable();
        support.dedup();
        let wide = self.embed(&support)?;
        let local = |q: usize| support.iter().position(|&s| s == q).unwrap();
        let local_gates: Vec<Gate> = gates.iter().map(|g| g.relabel(local)).collect();
        let dim = wide.dim();
        let inv: Vec<usize> = (0..dim as u64)
            .map(|a| crate::gates::apply_inverse(&local_gates, a) as usize)
            .collect();
        let mut block = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                block[a * dim + b] = wide.entry(inv[a], inv[b]);
            }
        }
        let mut out = Self::new(support, block)?;
        out.tag = self.tag.clone();
        Ok(out)
    }

    /// Projector check on the local block. `P (x) I` is a projector iff `P`
    /// is, so this agrees with the check on any embedding.
    pub fn projector_check(&self, tol: f64) -> ProjectorCheck {
        projector_check(&self.to_matrix(), tol)
    }
}

/// A weighted sum of local operators on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    n: usize,
    terms: Vec<LocalOperator>,
    weights: Vec<f64>,
}

impl OperatorSum {
    pub fn new(n: usize, terms: Vec<LocalOperator>) -> Result<Self> {
        let weights = vec![1.0; terms.len()];
        Self::weighted(n, terms, weights)
    }

    pub fn weighted(n: usize, terms: Vec<LocalOperator>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != terms.len() {
            return Err(Error::InvalidOperator(format!(
                "{} weights for {} terms",
                weights.len(),
                terms.len()
            )));
        }
        for t in &terms {
            if let Some(&q) = t.support.iter().find(|&&q| q >= n) {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidOperator("non-finite weight".into()));
        }
        Ok(Self { n, terms, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[LocalOperator] {
        &self.terms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: LocalOperator, weight: f64) -> Result<()> {
        if let Some(&q) = term.support.iter().find(|&&q| q >= self.n) {
            return Err(Error::QubitOutOfRange {
                index: q,
                n: self.n,
            });
        }
        self.terms.push(term);
        self.weights.push(weight);
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            terms: self.terms.clone(),
            weights: self.weights.iter().map(|w| w * s).collect(),
        }
    }

    /// Safe upper bound on the operator norm without assembly:
    /// `sum_a |w_a| 2^{k_a} max|entry|`.
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w.abs() * t.dim() as f64 * t.max_abs_entry())
            .sum()
    }

    fn check_basis(&self, x: BitString) -> Result<()> {
        if self.n > MAX_BASIS_QUBITS {
            return Err(Error::Precondition(format!(
                "{} qubits exceed the basis-string width",
                self.n
            )));
        }
        if x.n() != self.n {
            return Err(Error::Precondition(format!(
                "basis string has {} qubits, operator has {}",
                x.n(),
                self.n
            )));
        }
        Ok(())
    }

    /// `<x|A|y>`.
    pub fn matrix_element(&self, x: BitString, y: BitString) -> Result<f64> {
        self.check_basis(x)?;
        self.check_basis(y)?;
        Ok(self.element(x.value(), y.value()))
    }

    /// Unchecked `<x|A|y>` on raw basis indices.
    #[inline]
    pub fn element(&self, x: u64, y: u64) -> f64 {
        let diff = x ^ y;
        let mut acc = 0.0;
        for (t, w) in self.terms.iter().zip(&self.weights) {
            if diff & !support_mask(&t.support) != 0 {
                continue;
            }
            acc += w * t.entry(gather(x, &t.support), gather(y, &t.support));
        }
        acc
    }

    /// Nonzero entries of row `x`, sorted by column.
    pub fn apply_to_basis(&self, x: BitString) -> Result<Vec<(BitString, f64)>> {
        self.check_basis(x)?;
        Ok(self
            .row(x.value())
            .into_iter()
            .map(|(y, v)| (x.with_value(y), v))
            .collect())
    }

    /// Unchecked row extraction on raw indices.
    pub fn row(&self, x: u64) -> Vec<(u64, f64)> {
        let mut entries: Vec<(u64, f64)> = Vec::new();
        for (t, w) in self.terms.iter().zip(&self.weights) {
            let dim = t.dim();
            let r = gather(x, &t.support);
            for c in 0..dim {
                let v = t.block[r * dim + c];
                if v != 0.0 {
                    entries.push((scatter(x, &t.support, c), w * v));
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        for (y, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == y => last.1 += v,
                _ => merged.push((y, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        merged
    }

    fn check_dense(&self, limit: usize) -> Result<usize> {
        if self.n > limit || self.n > MAX_BASIS_QUBITS {
            return Err(Error::DenseLimit { n: self.n, limit });
        }
        Ok(1usize << self.n)
    }

    pub fn to_dense(&self, limit: usize) -> Result<DMatrix<f64>> {
        let dim = self.check_dense(limit)?;
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim as u64 {
            for (y, v) in self.row(x) {
                m[(x as usize, y as usize)] = v;
            }
        }
        Ok(m)
    }

    pub fn to_csr(&self, limit: usize) -> Result<CsrMatrix> {
        let dim = self.check_dense(limit)?;
        Ok(CsrMatrix::from_rows(dim, |x| self.row(x as u64)))
    }

    /// `<b|A|v>` without assembling row `b`.
    #[inline]
    pub fn row_dot(&self, b: u64, v: &[f64]) -> f64 {
        let mut total = 0.0;
        for (t, w) in self.terms.iter().zip(&self.weights) {
            let tdim = t.dim();
            let r = gather(b, &t.support);
            let row = &t.block[r * tdim..(r + 1) * tdim];
            let mut acc = 0.0;
            for (c, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    acc += a * v[scatter(b, &t.support, c) as usize];
                }
            }
            total += w * acc;
        }
        total
    }

    /// Matrix-free `out = A v` over the full `2^n` basis.
    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        self.matvec_with(Exec::default(), v, out)
    }

    pub fn matvec_with(&self, exec: Exec, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), 1usize << self.n);
        exec.fill(out, |b| self.row_dot(b as u64, v));
    }

    /// Lower and upper bounds on the spectrum from the exact spectra of the
    /// individual weighted terms.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (t, &w) in self.terms.iter().zip(&self.weights) {
            let eig = nalgebra::SymmetricEigen::new(t.to_matrix()).eigenvalues;
            let (mn, mx) = eig
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| {
                    (a.min(e), b.max(e))
                });
            if w >= 0.0 {
                lo += w * mn;
                hi += w * mx;
            } else {
                lo += w * mx;
                hi += w * mn;
            }
        }
        (lo, hi)
    }

    /// Whether every weighted term has off-diagonal entries of sign `sign`
    /// (`+1`: non-negative, `-1`: non-positive), making the sum sign-definite
    /// off the diagonal.
    pub fn off_diagonal_sign_is(&self, sign: f64) -> bool {
        self.terms.iter().zip(&self.weights).all(|(t, &w)| {
            let dim = t.dim();
            (0..dim).all(|r| (0..dim).all(|c| r == c || sign * w * t.entry(r, c) >= 0.0))
        })
    }

    /// Term-wise `U A U^dagger`.
    pub fn conjugate_by_circuit(&self, gates: &[Gate]) -> Result<Self> {
        crate::gates::check_width(gates, self.n)?;
        let terms = self
            .terms
            .iter()
            .map(|t| t.conjugate_by_circuit(gates))
            .collect::<Result<Vec<_>>>()?;
        Self::weighted(self.n, terms, self.weights.clone())
    }

    /// Projector check on the assembled matrix.
    pub fn projector_check(&self, tol: f64, limit: usize) -> Result<ProjectorCheck> {
        Ok(projector_check(&self.to_dense(limit)?, tol))
    }
}
