//! Projector validation and the Perron-Frobenius block structure of
//! non-negative projectors.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Outcome of [`projector_check`]. `residual` is the max of the three parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorCheck {
    pub ok: bool,
    pub residual: f64,
    pub idempotency: f64,
    pub symmetry: f64,
    pub negativity: f64,
}

/// Checks `P^2 = P`, `P = P^T` and `P >= 0` entrywise, all within `tol`.
pub fn projector_check(p: &DMatrix<f64>, tol: f64) -> ProjectorCheck {
    let idempotency = if p.is_square() {
        (p * p - p).amax()
    } else {
        f64::INFINITY
    };
    let symmetry = if p.is_square() {
        (p - p.transpose()).amax()
    } else {
        f64::INFINITY
    };
    let negativity = p.iter().fold(0.0f64, |m, &v| m.max(-v));
    let residual = idempotency.max(symmetry).max(negativity);
    ProjectorCheck {
        ok: residual <= tol,
        residual,
        idempotency,
        symmetry,
        negativity,
    }
}

/// One connected component `T` of a non-negative projector together with its
/// strictly positive unit vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockComponent {
    n: usize,
    amplitude: BTreeMap<u64, f64>,
}

impl BlockComponent {
    /// Amplitudes must be strictly positive and square-sum to one within `1e-9`.
    pub fn new(n: usize, amplitude: BTreeMap<u64, f64>) -> Result<Self> {
        if amplitude.is_empty() {
            return Err(Error::InvalidOperator("empty block component".into()));
        }
        if let Some((x, a)) = amplitude.iter().find(|(_, &a)| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidOperator(format!(
                "amplitude {a} at {x:#b} is not strictly positive"
            )));
        }
        if let Some(x) = amplitude.keys().find(|&&x| n < 64 && x >> n != 0) {
            return Err(Error::BitStringOutOfRange { value: *x, n });
        }
        let norm: f64 = amplitude.values().map(|a| a * a).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidOperator(format!(
                "component norm^2 {norm} differs from 1"
            )));
        }
        Ok(Self { n, amplitude })
    }

    /// Normalizes positive weights into a unit vector first.
    pub fn from_weights(n: usize, weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let raw: BTreeMap<u64, f64> = weights.into_iter().collect();
        let norm = raw.values().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidOperator(
                "component has no positive weight".into(),
            ));
        }
        Self::new(n, raw.into_iter().map(|(x, a)| (x, a / norm)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support_set(&self) -> impl Iterator<Item = BitString> + '_ {
        self.amplitude
            .keys()
            .map(move |&x| BitString::new(x, self.n).expect("checked at construction"))
    }

    pub fn amplitudes(&self) -> &BTreeMap<u64, f64> {
        &self.amplitude
    }

    pub fn amplitude(&self, x: u64) -> Option<f64> {
        self.amplitude.get(&x).copied()
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }
}

/// `sum_j |psi_j><psi_j|` on a `dim`-dimensional space. Errors if two
/// components overlap.
pub fn projector_from_components(dim: usize, comps: &[BlockComponent]) -> Result<DMatrix<f64>> {
    let mut seen = vec![false; dim];
    let mut p = DMatrix::zeros(dim, dim);
    for c in comps {
        for (&x, _) in c.amplitudes() {
            let x = x as usize;
            if x >= dim {
                return Err(Error::InvalidOperator(format!(
                    "component index {x} outside dimension {dim}"
                )));
            }
            if seen[x] {
                return Err(Error::InvalidOperator(format!(
                    "basis state {x} appears in two components"
                )));
            }
            seen[x] = true;
        }
        for (&x, &a) in c.amplitudes() {
            for (&y, &b) in c.amplitudes() {
                p[(x as usize, y as usize)] = a * b;
            }
        }
    }
    Ok(p)
}

/// Result of [`block_decompose`].
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecomposition {
    pub components: Vec<BlockComponent>,
    /// `max |P - sum_j psi_j psi_j^T|` over all entries.
    pub residual: f64,
}

impl BlockDecomposition {
    pub fn rank(&self) -> usize {
        self.components.len()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Splits a non-negative projector into its connected components. Two
/// strings are linked when `<x|P|y> > tol`; each component carries
/// `psi_x = sqrt(<x|P|x>)`. Fails if the components do not rebuild `P`
/// within `tol`.
pub fn block_decompose(p: &DMatrix<f64>, tol: f64) -> Result<BlockDecomposition> {
    let dim = p.nrows();
    if !p.is_square() || !dim.is_power_of_two() {
        return Err(Error::InvalidOperator(format!(
            "expected a 2^n square matrix, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    let mut parent: Vec<usize> = (0..dim).collect();
    for x in 0..dim {
        for y in (x + 1)..dim {
            if p[(x, y)] > tol {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..dim {
        if p[(x, x)] > tol {
            let r = find(&mut parent, x);
            groups.entry(r).or_default().push(x);
        }
    }
    let mut components = Vec::with_capacity(groups.len());
    for members in groups.values() {
        let weights = members.iter().map(|&x| (x as u64, p[(x, x)].sqrt()));
        components.push(BlockComponent::from_weights(n, weights)?);
    }
    let rebuilt = projector_from_components(dim, &components)?;
    let residual = (p - rebuilt).amax();
    if residual > tol {
        return Err(Error::Reconstruction { residual, tol });
    }
    Ok(BlockDecomposition {
        components,
        residual,
    })
}

/// `sqrt(<y|P|y> / <x|P|x>)`, the ratio of Perron amplitudes of `y` and `x`
/// inside their common block.
pub fn amplitude_ratio(p: &DMatrix<f64>, x: BitString, y: BitString, tol: f64) -> Result<f64> {
    let (xi, yi) = (x.value() as usize, y.value() as usize);
    if xi >= p.nrows() || yi >= p.nrows() {
        return Err(Error::BitStringOutOfRange {
            value: x.value().max(y.value()),
            n: p.nrows().trailing_zeros() as usize,
        });
    }
    let pxx = p[(xi, xi)];
    if pxx <= tol {
        return Err(Error::ZeroDiagonal { x: x.value() });
    }
    if p[(xi, yi)] <= tol {
        return Err(Error::DifferentBlocks {
            x: x.value(),
            y: y.value(),
        });
    }
    Ok((p[(yi, yi)] / pxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn m(dim: usize, rows: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(dim, dim, rows)
    }

    fn bs(v: u64, n: usize) -> BitString {
        BitString::new(v, n).unwrap()
    }

    #[test]
    fn checks_on_small_matrices() {
        let x = m(2, &[0., 1., 1., 0.]);
        let c = projector_check(&x, 1e-12);
        assert!(!c.ok);
        assert_eq!(c.idempotency, 1.0);
        let p0 = m(2, &[1., 0., 0., 0.]);
        let c = projector_check(&p0, 1e-12);
        assert!(c.ok);
        assert_eq!(c.residual, 0.0);
        let minus = m(2, &[0.5, -0.5, -0.5, 0.5]);
        let c = projector_check(&minus, 1e-12);
        assert!(!c.ok && c.idempotency < 1e-15 && c.negativity == 0.5);
    }

    #[test]
    fn plus_state_is_one_uniform_block() {
        let d = block_decompose(&m(2, &[0.5, 0.5, 0.5, 0.5]), 1e-9).unwrap();
        assert_eq!(d.rank(), 1);
        let a = d.components[0].amplitudes();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[&0] - s).abs() < 1e-15 && (a[&1] - s).abs() < 1e-15);
    }

    #[test]
    fn identity_splits_into_singletons() {
        let d = block_decompose(&DMatrix::identity(2, 2), 1e-9).unwrap();
        let sets: Vec<Vec<u64>> = d
            .components
            .iter()
            .map(|c| c.support_set().map(|b| b.value()).collect())
            .collect();
        assert_eq!(sets, vec![vec![0], vec![1]]);
    }

    #[test]
    fn two_block_example_against_eigendecomposition() {
        // |00><00| + |phi><phi|, phi = (|01> + |10>)/sqrt2
        let p = m(
            4,
            &[
                1., 0., 0., 0., //
                0., 0.5, 0.5, 0., //
                0., 0.5, 0.5, 0., //
                0., 0., 0., 0.,
            ],
        );
        let d = block_decompose(&p, 1e-9).unwrap();
        let sets: Vec<Vec<u64>> = d
            .components
            .iter()
            .map(|c| c.support_set().map(|b| b.value()).collect())
            .collect();
        assert_eq!(sets, vec![vec![0], vec![1, 2]]);
        let eig = SymmetricEigen::new(p.clone());
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 0.5).count();
        assert_eq!(rank, d.rank());
    }

    #[test]
    fn ratios() {
        let p = m(2, &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(amplitude_ratio(&p, bs(0, 1), bs(1, 1), 1e-9).unwrap(), 1.0);
        let q = m(2, &[0.2, 0.4, 0.4, 0.8]);
        assert!((amplitude_ratio(&q, bs(0, 1), bs(1, 1), 1e-9).unwrap() - 2.0).abs() < 1e-12);
        let r = m(2, &[1., 0., 0., 0.]);
        assert!(matches!(
            amplitude_ratio(&r, bs(1, 1), bs(0, 1), 1e-9),
            Err(Error::ZeroDiagonal { .. })
        ));
        let i = DMatrix::identity(2, 2);
        assert!(matches!(
            amplitude_ratio(&i, bs(0, 1), bs(1, 1), 1e-9),
            Err(Error::DifferentBlocks { .. })
        ));
    }

    #[test]
    fn non_projector_fails_reconstruction() {
        // positive symmetric but not a projector
        let p = m(2, &[0.5, 0.1, 0.1, 0.5]);
        assert!(matches!(
            block_decompose(&p, 1e-9),
            Err(Error::Reconstruction { .. })
        ));
    }

    #[test]
    fn overlapping_components_rejected() {
        let a = BlockComponent::from_weights(1, [(0, 1.0)]).unwrap();
        let b = BlockComponent::from_weights(1, [(0, 1.0), (1, 1.0)]).unwrap();
        assert!(projector_from_components(2, &[a, b]).is_err());
        assert!(BlockComponent::new(1, [(0, -1.0)].into_iter().collect()).is_err());
    }
}
