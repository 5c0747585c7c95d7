//! Instance data model: stoquastic k-SAT, stoquastic LH-MIN and disorder
//! ensembles, with validation and JSON persistence.

mod dimacs;
mod generate;
mod io;

pub use dimacs::{from_dimacs, Cnf};
pub use generate::{
    planted_product_instance, random_block_projector, random_projector_instance,
    random_stoquastic_hamiltonian, GridSpec,
};
pub use io::{load, save, Instance, FORMAT_VERSION};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ops::{LocalOperator, OperatorSum, DEFAULT_MAX_LOCALITY};
use crate::ETA;

pub type Metadata = Map<String, Value>;

/// Stoquastic k-SAT: projectors with non-negative entries plus precision `epsilon`.
#[derive(Clone, Debug, PartialEq)]
pub struct StoqSatInstance {
    pub n: usize,
    pub epsilon: Option<f64>,
    pub projectors: Vec<LocalOperator>,
    pub metadata: Metadata,
}

impl StoqSatInstance {
    pub fn new(n: usize, epsilon: Option<f64>, projectors: Vec<LocalOperator>) -> Self {
        Self {
            n,
            epsilon,
            projectors,
            metadata: Metadata::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.projectors.len()
    }

    pub fn max_locality(&self) -> usize {
        self.projectors
            .iter()
            .map(|p| p.locality())
            .max()
            .unwrap_or(0)
    }

    /// `epsilon`, or a precondition error naming the instance as unflagged.
    pub fn require_epsilon(&self) -> Result<f64> {
        self.epsilon.ok_or_else(|| {
            Error::Precondition("instance carries no epsilon; supply one explicitly".into())
        })
    }

    /// `sum_a Pi_a` with unit weights.
    pub fn projector_sum(&self) -> Result<OperatorSum> {
        OperatorSum::new(self.n, self.projectors.clone())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        if self.projectors.is_empty() {
            r.push(None, ViolationKind::Empty, 0.0, "no projectors");
        }
        match self.epsilon {
            None => r.warn("epsilon missing"),
            Some(e) if !(e > 0.0 && e <= 1.0) => {
                r.push(None, ViolationKind::Epsilon, e, "epsilon outside (0, 1]")
            }
            _ => {}
        }
        for (i, p) in self.projectors.iter().enumerate() {
            check_support(&mut r, i, p, self.n);
            let c = p.projector_check(ETA);
            if c.negativity > ETA {
                r.push(
                    Some(i),
                    ViolationKind::NegativeEntry,
                    c.negativity,
                    "negative entry",
                );
            }
            if c.symmetry > ETA {
                r.push(
                    Some(i),
                    ViolationKind::Asymmetric,
                    c.symmetry,
                    "block not symmetric",
                );
            }
            if c.idempotency > ETA {
                r.push(
                    Some(i),
                    ViolationKind::NotProjector,
                    c.idempotency,
                    "P^2 != P",
                );
            }
        }
        r
    }
}

/// Stoquastic LH-MIN: terms with non-positive off-diagonals and a threshold pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LhMinInstance {
    pub n: usize,
    pub terms: Vec<LocalOperator>,
    pub lambda_yes: Option<f64>,
    pub lambda_no: Option<f64>,
    pub metadata: Metadata,
}

impl LhMinInstance {
    pub fn new(n: usize, terms: Vec<LocalOperator>) -> Self {
        Self {
            n,
            terms,
            lambda_yes: None,
            lambda_no: None,
            metadata: Metadata::new(),
        }
    }

    pub fn with_thresholds(mut self, lambda_yes: f64, lambda_no: f64) -> Self {
        self.lambda_yes = Some(lambda_yes);
        self.lambda_no = Some(lambda_no);
        self
    }

    pub fn hamiltonian(&self) -> Result<OperatorSum> {
        OperatorSum::new(self.n, self.terms.clone())
    }

    /// Both thresholds, checked to be ordered.
    pub fn thresholds(&self) -> Result<(f64, f64)> {
        match (self.lambda_yes, self.lambda_no) {
            (Some(y), Some(n)) if n > y => Ok((y, n)),
            (Some(y), Some(n)) => Err(Error::Precondition(format!(
                "thresholds inverted: lambda_yes {y} >= lambda_no {n}"
            ))),
            _ => Err(Error::Precondition("instance has no thresholds".into())),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        for (i, t) in self.terms.iter().enumerate() {
            check_support(&mut r, i, t, self.n);
            let s = t.symmetry_residual();
            if s > ETA {
                r.push(Some(i), ViolationKind::Asymmetric, s, "block not symmetric");
            }
            let off = t.max_off_diagonal();
            if off > ETA {
                r.push(
                    Some(i),
                    ViolationKind::NotStoquastic,
                    off,
                    "positive off-diagonal entry",
                );
            }
        }
        match (self.lambda_yes, self.lambda_no) {
            (Some(y), Some(n)) if n - y <= 0.0 => r.push(
                None,
                ViolationKind::Thresholds,
                y - n,
                "lambda_no - lambda_yes must be positive",
            ),
            (Some(_), Some(_)) => {}
            _ => r.warn("thresholds missing"),
        }
        r
    }
}

/// One template of a `(k,l)`-local ensemble: a support, the random bits it
/// reads, and a block for each of their `2^l` assignments (local bit `i` of
/// the table index is `random_bits[i]`).
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTerm {
    pub support: Vec<usize>,
    pub random_bits: Vec<usize>,
    pub tables: Vec<LocalOperator>,
}

impl EnsembleTerm {
    pub fn new(
        support: Vec<usize>,
        random_bits: Vec<usize>,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if tables.len() != 1usize << random_bits.len() {
            return Err(Error::InvalidOperator(format!(
                "{} table rows for {} random bits",
                tables.len(),
                random_bits.len()
            )));
        }
        let tables = tables
            .into_iter()
            .map(|b| LocalOperator::new(support.clone(), b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            support,
            random_bits,
            tables,
        })
    }

    pub fn table_index(&self, r: &[bool]) -> usize {
        self.random_bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((r[b] as usize) << i))
    }
}

/// A family `H(r)` of stoquastic Hamiltonians indexed by `m` random bits.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderEnsemble {
    pub n: usize,
    pub m: usize,
    pub terms: Vec<EnsembleTerm>,
    pub lambda_yes: Option<f64>,
    pub lambda_no: Option<f64>,
    pub metadata: Metadata,
}

impl DisorderEnsemble {
    pub fn new(n: usize, m: usize, terms: Vec<EnsembleTerm>) -> Self {
        Self {
            n,
            m,
            terms,
            lambda_yes: None,
            lambda_no: None,
            metadata: Metadata::new(),
        }
    }

    /// `H(r)` at a fixed assignment of the `m` random bits.
    pub fn realize(&self, r: &[bool]) -> Result<LhMinInstance> {
        if r.len() != self.m {
            return Err(Error::Precondition(format!(
                "{} random bits supplied, ensemble has {}",
                r.len(),
                self.m
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| t.tables[t.table_index(r)].clone())
            .collect();
        let mut inst = LhMinInstance::new(self.n, terms);
        inst.lambda_yes = self.lambda_yes;
        inst.lambda_no = self.lambda_no;
        Ok(inst)
    }

    pub fn max_random_locality(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.random_bits.len())
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        for (i, t) in self.terms.iter().enumerate() {
            if t.support.len() > DEFAULT_MAX_LOCALITY {
                r.push(
                    Some(i),
                    ViolationKind::Locality,
                    t.support.len() as f64,
                    "support too wide",
                );
            }
            if t.random_bits.len() > DEFAULT_MAX_LOCALITY {
                r.push(
                    Some(i),
                    ViolationKind::Locality,
                    t.random_bits.len() as f64,
                    "too many random bits",
                );
            }
            if let Some(&b) = t.random_bits.iter().find(|&&b| b >= self.m) {
                r.push(
                    Some(i),
                    ViolationKind::Range,
                    b as f64,
                    "random bit out of range",
                );
            }
            if let Some(&q) = t.support.iter().find(|&&q| q >= self.n) {
                r.push(
                    Some(i),
                    ViolationKind::Range,
                    q as f64,
                    "qubit out of range",
                );
            }
            for (row, b) in t.tables.iter().enumerate() {
                let off = b.max_off_diagonal();
                if off > ETA {
                    r.push(
                        Some(i),
                        ViolationKind::NotStoquastic,
                        off,
                        &format!("table row {row} has a positive off-diagonal entry"),
                    );
                }
                let s = b.symmetry_residual();
                if s > ETA {
                    r.push(
                        Some(i),
                        ViolationKind::Asymmetric,
                        s,
                        &format!("table row {row} not symmetric"),
                    );
                }
            }
        }
        if let (Some(y), Some(n)) = (self.lambda_yes, self.lambda_no) {
            if n - y <= 0.0 {
                r.push(
                    None,
                    ViolationKind::Thresholds,
                    y - n,
                    "lambda_no - lambda_yes must be positive",
                );
            }
        }
        r
    }
}

fn check_support(r: &mut ValidationReport, i: usize, t: &LocalOperator, n: usize) {
    if let Some(&q) = t.support().iter().find(|&&q| q >= n) {
        r.push(
            Some(i),
            ViolationKind::Range,
            q as f64,
            "qubit out of range",
        );
    }
    if t.locality() > DEFAULT_MAX_LOCALITY {
        r.push(
            Some(i),
            ViolationKind::Locality,
            t.locality() as f64,
            "support too wide",
        );
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Empty,
    Epsilon,
    Range,
    Locality,
    NegativeEntry,
    Asymmetric,
    NotProjector,
    NotStoquastic,
    Thresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub term: Option<usize>,
    pub kind: ViolationKind,
    pub residual: f64,
    pub detail: String,
}

/// Every violated invariant plus non-fatal warnings (such as a missing epsilon).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    fn push(&mut self, term: Option<usize>, kind: ViolationKind, residual: f64, detail: &str) {
        self.violations.push(Violation {
            term,
            kind,
            residual,
            detail: detail.to_string(),
        });
    }

    fn warn(&mut self, msg: &str) {
        self.warnings.push(msg.to_string());
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_clean() {
            return Ok(());
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v.term {
                Some(t) => format!("term {t}: {} ({:e})", v.detail, v.residual),
                None => format!("{} ({:e})", v.detail, v.residual),
            })
            .collect();
        Err(Error::Invalid(parts.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_x_is_not_a_projector() {
        let x = LocalOperator::new(vec![0], vec![0., 1., 1., 0.]).unwrap();
        let inst = StoqSatInstance::new(1, Some(1.0), vec![x]);
        let rep = inst.validate();
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::NotProjector && v.term == Some(0)));
    }

    #[test]
    fn positive_off_diagonal_flagged() {
        let h = LocalOperator::new(vec![0], vec![0., 0.5, 0.5, 0.]).unwrap();
        let inst = LhMinInstance::new(1, vec![h]).with_thresholds(0.0, 1.0);
        let rep = inst.validate();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].kind, ViolationKind::NotStoquastic);
        assert_eq!(rep.violations[0].residual, 0.5);
    }

    #[test]
    fn thresholds_and_epsilon() {
        let inst = LhMinInstance::new(1, vec![]).with_thresholds(1.0, 1.0);
        assert!(!inst.validate().is_clean());
        assert!(inst.thresholds().is_err());
        let p = LocalOperator::identity(vec![0]).unwrap();
        let s = StoqSatInstance::new(1, None, vec![p.clone()]);
        let rep = s.validate();
        assert!(rep.is_clean() && rep.warnings == vec!["epsilon missing".to_string()]);
        assert!(!StoqSatInstance::new(1, Some(0.0), vec![p])
            .validate()
            .is_clean());
    }

    #[test]
    fn ensemble_realization() {
        // H(r) = -X + 2 r |0><0|
        let ens = DisorderEnsemble::new(
            1,
            1,
            vec![
                EnsembleTerm::new(vec![0], vec![], vec![vec![0., -1., -1., 0.]]).unwrap(),
                EnsembleTerm::new(vec![0], vec![0], vec![vec![0.; 4], vec![2., 0., 0., 0.]])
                    .unwrap(),
            ],
        );
        assert!(ens.validate().is_clean());
        let h1 = ens.realize(&[true]).unwrap();
        assert_eq!(h1.terms[1].entry(0, 0), 2.0);
        assert!(h1.validate().violations.is_empty());
        assert!(ens.realize(&[]).is_err());
    }
}
