//! DIMACS CNF parsing and the diagonal-projector encoding of clauses.

use serde_json::{json, Value};

use super::StoqSatInstance;
use crate::error::{Error, Result};
use crate::ops::{LocalOperator, DEFAULT_MAX_LOCALITY};

/// A CNF formula with 1-based signed literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i64>>,
}

impl Cnf {
    /// Parses `p cnf <vars> <clauses>` text. Clauses end with `0` and may span
    /// lines; `c` lines and a trailing `%` section are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current: Vec<i64> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if line.starts_with('p') {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 4 || f[1] != "cnf" {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("malformed header {line:?}"),
                    });
                }
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|e| Error::Parse {
                        line: line_no,
                        msg: format!("header field {s:?}: {e}"),
                    })
                };
                if header.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "duplicate header".into(),
                    });
                }
                header = Some((parse(f[2])?, parse(f[3])?));
                continue;
            }
            let (vars, _) = header.ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "clause before 'p cnf' header".into(),
            })?;
            for tok in line.split_whitespace() {
                let lit: i64 = tok.parse().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("literal {tok:?}: {e}"),
                })?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    if lit.unsigned_abs() as usize > vars {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("variable {} exceeds declared {vars}", lit.abs()),
                        });
                    }
                    current.push(lit);
                }
            }
        }
        let (num_vars, declared) = header.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing 'p cnf' header".into(),
        })?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != declared {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "header declares {declared} clauses, found {}",
                    clauses.len()
                ),
            });
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                s.push_str(&l.to_string());
                s.push(' ');
            }
            s.push_str("0\n");
        }
        s
    }

    /// Whether the assignment (bit `v-1` = variable `v`) satisfies every clause.
    pub fn satisfied_by(&self, assignment: u64) -> bool {
        self.clauses.iter().all(|c| clause_satisfied(c, assignment))
    }

    pub fn unsatisfied_count(&self, assignment: u64) -> usize {
        self.clauses
            .iter()
            .filter(|c| !clause_satisfied(c, assignment))
            .count()
    }
}

pub(crate) fn clause_satisfied(clause: &[i64], assignment: u64) -> bool {
    clause.iter().any(|&l| {
        let bit = (assignment >> (l.unsigned_abs() - 1)) & 1 == 1;
        bit == (l > 0)
    })
}

/// Distinct variables of a clause (0-based, ascending) and the unique
/// violating local assignment, or `None` for a tautology.
pub(crate) fn clause_violation(clause: &[i64]) -> Option<(Vec<usize>, usize)> {
    let mut vars: Vec<usize> = clause
        .iter()
        .map(|l| l.unsigned_abs() as usize - 1)
        .collect();
    vars.sort_unstable();
    vars.dedup();
    let mut violating = 0usize;
    for (i, &v) in vars.iter().enumerate() {
        let pos = clause.contains(&(v as i64 + 1));
        let neg = clause.contains(&-(v as i64 + 1));
        if pos && neg {
            return None;
        }
        if neg {
            violating |= 1 << i;
        }
    }
    Some((vars, violating))
}

/// One diagonal projector `I - |b><b|` per clause, `b` its violating
/// assignment; `epsilon = 1`. Tautologies are dropped and recorded under
/// `metadata.warnings`.
pub fn from_dimacs(text: &str) -> Result<StoqSatInstance> {
    let cnf = Cnf::parse(text)?;
    if cnf.clauses.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "formula has no clauses".into(),
        });
    }
    let mut projectors = Vec::new();
    let mut warnings = Vec::new();
    for (i, c) in cnf.clauses.iter().enumerate() {
        let Some((vars, b)) = clause_violation(c) else {
            warnings.push(Value::String(format!(
                "clause {} is a tautology; dropped",
                i + 1
            )));
            continue;
        };
        if vars.len() > DEFAULT_MAX_LOCALITY {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "clause {} has {} variables (limit {DEFAULT_MAX_LOCALITY})",
                    i + 1,
                    vars.len()
                ),
            });
        }
        let dim = 1usize << vars.len();
        let mut block = vec![0.0; dim * dim];
        for d in 0..dim {
            if d != b {
                block[d * dim + d] = 1.0;
            }
        }
        projectors.push(LocalOperator::new(vars, block)?.with_tag(format!("clause {}", i + 1)));
    }
    if projectors.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "every clause is a tautology".into(),
        });
    }
    let mut inst = StoqSatInstance::new(cnf.num_vars, Some(1.0), projectors);
    inst.metadata.insert("source".into(), json!("dimacs"));
    inst.metadata
        .insert("clauses".into(), json!(cnf.clauses.len()));
    if !warnings.is_empty() {
        inst.metadata
            .insert("warnings".into(), Value::Array(warnings));
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::OperatorSum;

    #[test]
    fn single_clause_projector() {
        let inst = from_dimacs("p cnf 3 1\n1 2 -3 0\n").unwrap();
        assert_eq!(inst.epsilon, Some(1.0));
        let p = &inst.projectors[0];
        assert_eq!(p.support(), &[0, 1, 2]);
        // violating local assignment x1=0, x2=0, x3=1 is local index 0b100
        for d in 0..8 {
            let expect = if d == 0b100 { 0.0 } else { 1.0 };
            assert_eq!(p.entry(d, d), expect);
        }
        assert!(p.is_diagonal());
        assert!(inst.validate().is_clean());
    }

    #[test]
    fn empty_and_malformed() {
        assert!(from_dimacs("p cnf 3 0\n").is_err());
        assert!(from_dimacs("1 2 0\n").is_err());
        assert!(matches!(
            from_dimacs("p cnf 2 1\n1 3 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(from_dimacs("p cnf 2 1\n1 x 0\n").is_err());
    }

    #[test]
    fn tautology_dropped_with_warning() {
        let inst = from_dimacs("p cnf 2 2\n1 -1 2 0\n1 2 0\n").unwrap();
        assert_eq!(inst.m(), 1);
        assert!(inst.metadata["warnings"].as_array().unwrap().len() == 1);
    }

    #[test]
    fn multi_clause_g_is_diagonal_and_counts_satisfied() {
        let text = "c demo\np cnf 3 3\n1 2 0\n-1 3\n0\n-2 -3 0\n";
        let inst = from_dimacs(text).unwrap();
        let cnf = Cnf::parse(text).unwrap();
        let g = OperatorSum::weighted(3, inst.projectors.clone(), vec![1.0 / 3.0; 3]).unwrap();
        let d = g.to_dense(14).unwrap();
        for x in 0..8 {
            for y in 0..8 {
                if x != y {
                    assert_eq!(d[(x, y)], 0.0);
                }
            }
            let sat = 3 - cnf.unsatisfied_count(x as u64);
            assert!((d[(x, x)] - sat as f64 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_text() {
        let cnf = Cnf::parse("p cnf 4 2\n1 -4 0\n2 3 -1 0\n").unwrap();
        assert_eq!(Cnf::parse(&cnf.to_dimacs()).unwrap(), cnf);
    }
}
