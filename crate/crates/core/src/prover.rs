//! Merlin's strategies: the honest maximal-amplitude string and adversarial
//! candidate lists.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::instances::StoqSatInstance;
use crate::spectral::{extreme_eigenvalue, top_eigenspace_projection, PowerOptions, Which};
use crate::walk::build_g;
use crate::ETA;

/// Amplitudes within this distance count as tied for the argmax.
pub const TIE_TOL: f64 = 1e-12;

/// Eigenvalue deficit below which an instance is treated as a yes-instance.
pub const YES_TOL: f64 = 1e-8;

/// A non-negative witness state restricted to its support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessVector {
    pub n: usize,
    pub amplitudes: BTreeMap<u64, f64>,
    pub argmax: BitString,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HonestWitness {
    pub vector: WitnessVector,
    pub top_eigenvalue: f64,
    /// Set when the top eigenvalue of `G` is below `1 - YES_TOL`, i.e. the
    /// instance does not look like a yes-instance.
    pub flagged: bool,
}

impl HonestWitness {
    pub fn string(&self) -> BitString {
        self.vector.argmax
    }
}

/// Builds a [`WitnessVector`] from a dense vector: absolute values, entries
/// at most `ETA` dropped, renormalized, argmax tie-broken toward the smallest string.
pub fn witness_from_dense(n: usize, v: &[f64]) -> Result<WitnessVector> {
    let mut amplitudes: BTreeMap<u64, f64> = v
        .iter()
        .enumerate()
        .map(|(i, a)| (i as u64, a.abs()))
        .filter(|(_, a)| *a > ETA)
        .collect();
    let norm = amplitudes.values().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Precondition(
            "witness vector vanishes after pruning".into(),
        ));
    }
    amplitudes.values_mut().for_each(|a| *a /= norm);
    let max = amplitudes.values().copied().fold(0.0, f64::max);
    let argmax = *amplitudes
        .iter()
        .find(|(_, &a)| a >= max - TIE_TOL)
        .map(|(x, _)| x)
        .expect("nonempty support");
    Ok(WitnessVector {
        n,
        amplitudes,
        argmax: BitString::new(argmax, n)?,
    })
}

/// Top eigenvector of `G`, its support and its maximal-amplitude string.
/// Below the dense limit the all-ones vector is projected exactly onto the
/// top eigenspace; above it shifted power iteration from all-ones is used.
/// Either way the vector is a non-negative invariant state when one exists.
pub fn honest_witness(instance: &StoqSatInstance, dense_limit: usize) -> Result<HonestWitness> {
    let g = build_g(instance)?;
    let (top, vector) = if instance.n <= dense_limit {
        let (top, v) = top_eigenspace_projection(&g.to_dense(dense_limit)?)?;
        (top, v.iter().copied().collect::<Vec<f64>>())
    } else {
        let r = extreme_eigenvalue(&g, Which::Max, &PowerOptions::default())?;
        (r.value, r.vector)
    };
    Ok(HonestWitness {
        vector: witness_from_dense(instance.n, &vector)?,
        top_eigenvalue: top,
        flagged: top < 1.0 - YES_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversaryMode {
    AllBasis,
    Random { count: usize, seed: u64 },
}

/// Largest `n` accepted by [`AdversaryMode::AllBasis`].
pub const ALL_BASIS_LIMIT: usize = 12;

pub fn adversarial_witnesses(n: usize, mode: AdversaryMode) -> Result<Vec<BitString>> {
    match mode {
        AdversaryMode::AllBasis => {
            if n > ALL_BASIS_LIMIT {
                return Err(Error::DenseLimit {
                    n,
                    limit: ALL_BASIS_LIMIT,
                });
            }
            (0..1u64 << n).map(|x| BitString::new(x, n)).collect()
        }
        AdversaryMode::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
            (0..count)
                .map(|_| BitString::new(rng.gen::<u64>() & mask, n))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{from_dimacs, planted_product_instance};
    use crate::ops::{LocalOperator, OperatorSum};
    use crate::walk::{WalkConfig, Walker};

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn dimacs_witness_satisfies_formula() {
        let text = "p cnf 3 3\n1 2 0\n-1 0\n-2 3 0\n";
        let inst = from_dimacs(text).unwrap();
        let w = honest_witness(&inst, 14).unwrap();
        assert!(!w.flagged);
        let cnf = crate::instances::Cnf::parse(text).unwrap();
        // satisfying assignments: x1=0, x2=1, x3=1 only
        assert_eq!(w.string().value(), 0b110);
        assert!(cnf.satisfied_by(w.string().value()));
        assert_eq!(w.vector.amplitudes.len(), 1);
        assert!((w.vector.amplitudes[&0b110] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_witness_tie_breaks_to_zero() {
        let ps = (0..2)
            .map(|q| LocalOperator::rank_one(vec![q], &[S, S]).unwrap())
            .collect();
        let inst = StoqSatInstance::new(2, Some(1.0), ps);
        let w = honest_witness(&inst, 14).unwrap();
        assert_eq!(w.string().value(), 0);
        assert!(w
            .vector
            .amplitudes
            .values()
            .all(|a| (a - 0.5).abs() < 1e-12));
        // the power-iteration path agrees
        let p = honest_witness(&inst, 0).unwrap();
        assert_eq!(p.string().value(), 0);
    }

    #[test]
    fn honest_string_has_positive_diagonals() {
        for seed in 0..10 {
            let inst = planted_product_instance(6, 3, 7, seed).unwrap();
            let w = honest_witness(&inst, 14).unwrap();
            assert!(!w.flagged, "seed {seed}: top {}", w.top_eigenvalue);
            let walker = Walker::new(&inst).unwrap();
            assert!(walker.diagonal_ok(w.string().value()));
        }
    }

    #[test]
    fn pruning_changes_little() {
        let inst = planted_product_instance(8, 2, 10, 4).unwrap();
        let g = build_g(&inst).unwrap().to_dense(14).unwrap();
        let (_, v) = top_eigenspace_projection(&g).unwrap();
        let w = honest_witness(&inst, 14).unwrap();
        let mut diff = 0.0;
        for (i, a) in v.iter().enumerate() {
            let b = w.vector.amplitudes.get(&(i as u64)).copied().unwrap_or(0.0);
            diff += (a.abs() - b).powi(2);
        }
        assert!(diff.sqrt() <= 16.0 * ETA + 1e-12);
    }

    #[test]
    fn no_instance_is_flagged() {
        let inst = StoqSatInstance::new(
            1,
            Some(0.5),
            vec![
                LocalOperator::new(vec![0], vec![1., 0., 0., 0.]).unwrap(),
                LocalOperator::rank_one(vec![0], &[S, S]).unwrap(),
            ],
        );
        let w = honest_witness(&inst, 14).unwrap();
        assert!(w.flagged);
        let g = OperatorSum::weighted(1, inst.projectors.clone(), vec![0.5, 0.5]).unwrap();
        let top = *crate::spectral::spectrum(&g, 14).unwrap().last().unwrap();
        assert!((w.top_eigenvalue - top).abs() < 1e-12);
    }

    #[test]
    fn adversaries() {
        assert_eq!(
            adversarial_witnesses(3, AdversaryMode::AllBasis)
                .unwrap()
                .len(),
            8
        );
        let a = adversarial_witnesses(9, AdversaryMode::Random { count: 5, seed: 1 }).unwrap();
        let b = adversarial_witnesses(9, AdversaryMode::Random { count: 5, seed: 1 }).unwrap();
        assert_eq!(a, b);
        assert!(adversarial_witnesses(13, AdversaryMode::AllBasis).is_err());
    }

    #[test]
    fn unsat_dimacs_rejects_every_basis_witness() {
        // x1 and not x1
        let inst = from_dimacs("p cnf 2 2\n1 0\n-1 0\n").unwrap();
        let w = Walker::new(&inst).unwrap();
        for x in adversarial_witnesses(2, AdversaryMode::AllBasis).unwrap() {
            let t = w.run(x, &WalkConfig::new(5, 0), 0).unwrap();
            assert!(!t.outcome.accepted());
        }
    }
}
