//! Extreme eigenvalues by shifted power iteration, plus dense diagnostics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ops::OperatorSum;

/// Eigenvalues closer than this are treated as one level.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200_000,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralResult {
    pub value: f64,
    /// Eigenvector over the full `2^n` basis, unit norm.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `||A v - value v||_2`.
    pub residual: f64,
}

impl SpectralResult {
    /// Entries above `cutoff` in absolute value, keyed by basis index.
    pub fn support(&self, cutoff: f64) -> Vec<(u64, f64)> {
        self.vector
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > cutoff)
            .map(|(i, &v)| (i as u64, v))
            .collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power iteration on `sign * A + shift I` from `start`.
fn iterate(
    op: &OperatorSum,
    sign: f64,
    shift: f64,
    start: Vec<f64>,
    opts: &PowerOptions,
) -> SpectralResult {
    let dim = start.len();
    let mut v = start;
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut av = vec![0.0; dim];
    let mut best = SpectralResult {
        value: f64::NAN,
        vector: v.clone(),
        iterations: 0,
        residual: f64::INFINITY,
    };
    for it in 1..=opts.max_iter {
        op.matvec_with(opts.exec, &v, &mut av);
        let lambda = dot(&v, &av);
        let residual = av
            .iter()
            .zip(&v)
            .map(|(a, x)| (a - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < best.residual || best.value.is_nan() {
            best = SpectralResult {
                value: lambda,
                vector: v.clone(),
                iterations: it,
                residual,
            };
        }
        if residual <= opts.tol {
            return best;
        }
        // w = sign * A v + shift v
        for (a, x) in av.iter_mut().zip(&v) {
            *a = sign * *a + shift * x;
        }
        let s = norm(&av);
        if s == 0.0 {
            return best;
        }
        for (x, a) in v.iter_mut().zip(&av) {
            *x = a / s;
        }
        best.iterations = it;
    }
    best
}

/// Largest or smallest eigenvalue of `op` by power iteration on
/// `A + c I` (max) or `c I - A` (min), with `c` from the spectra of the
/// individual terms. The all-ones start overlaps the Perron vector whenever
/// the iterated matrix is entrywise non-negative; otherwise a second run
/// from a seeded random vector guards against an orthogonal start.
pub fn extreme_eigenvalue(
    op: &OperatorSum,
    which: Which,
    opts: &PowerOptions,
) -> Result<SpectralResult> {
    if op.n() > 30 {
        return Err(Error::DenseLimit {
            n: op.n(),
            limit: 30,
        });
    }
    let dim = 1usize << op.n();
    let (lo, hi) = op.spectral_bounds();
    let (sign, shift, perron) = match which {
        Which::Max => (1.0, (-lo).max(0.0), op.off_diagonal_sign_is(1.0)),
        Which::Min => (-1.0, hi.max(0.0), op.off_diagonal_sign_is(-1.0)),
    };
    let mut res = iterate(op, sign, shift, vec![1.0; dim], opts);
    if !perron || res.residual > opts.tol {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let alt = iterate(op, sign, shift, start, opts);
        let better = match which {
            Which::Max => alt.value > res.value + opts.tol,
            Which::Min => alt.value < res.value - opts.tol,
        };
        if better || (res.residual > opts.tol && alt.residual < res.residual) {
            res = alt;
        }
    }
    if res.residual > opts.tol {
        return Err(Error::NoConvergence {
            iterations: res.iterations,
            estimate: res.value,
            residual: res.residual,
        });
    }
    if perron {
        // fix the overall sign so the Perron vector is non-negative
        if res.vector.iter().sum::<f64>() < 0.0 {
            res.vector.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(res)
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

pub fn spectrum(op: &OperatorSum, limit: usize) -> Result<Vec<f64>> {
    Ok(eigenvalues(&op.to_dense(limit)?))
}

/// Number of eigenvalues strictly below `threshold`.
pub fn eigencount_below(op: &OperatorSum, threshold: f64, limit: usize) -> Result<usize> {
    Ok(spectrum(op, limit)?
        .iter()
        .filter(|&&e| e < threshold)
        .count())
}

/// Distance from the smallest eigenvalue to the next distinct one, merging
/// levels closer than [`DEGENERACY_TOL`]. Zero when the spectrum is a single level.
pub fn gap_of(eigs: &[f64]) -> f64 {
    let Some(&ground) = eigs.first() else {
        return 0.0;
    };
    eigs.iter()
        .find(|&&e| e - ground > DEGENERACY_TOL)
        .map_or(0.0, |&e| e - ground)
}

pub fn spectral_gap(op: &OperatorSum, limit: usize) -> Result<f64> {
    Ok(gap_of(&spectrum(op, limit)?))
}

/// Projection of the all-ones vector onto the eigenspace of the largest
/// eigenvalue (levels within [`DEGENERACY_TOL`]), normalized. For a
/// positive semidefinite non-negative matrix this is the limit of power
/// iteration from all-ones, hence entrywise non-negative.
pub fn top_eigenspace_projection(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::new(m.clone());
    let top = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let ones = DVector::from_element(m.nrows(), 1.0);
    let mut v = DVector::zeros(m.nrows());
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if top - e <= DEGENERACY_TOL {
            let u = eig.eigenvectors.column(i);
            v += u * u.dot(&ones);
        }
    }
    let s = v.norm();
    if s == 0.0 {
        return Err(Error::Precondition(
            "all-ones vector is orthogonal to the top eigenspace".into(),
        ));
    }
    Ok((top, v / s))
}
