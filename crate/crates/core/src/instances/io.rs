//! Versioned JSON container for instances.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DisorderEnsemble, EnsembleTerm, LhMinInstance, Metadata, StoqSatInstance};
use crate::error::{Error, Result};
use crate::ops::LocalOperator;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    StoqSat(StoqSatInstance),
    LhMin(LhMinInstance),
    Ensemble(DisorderEnsemble),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    qubits: Vec<usize>,
    matrix: Vec<f64>,
    dim: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    random_bits: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tables: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    version: u64,
    kind: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_yes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_no: Option<f64>,
    terms: Vec<TermDoc>,
    #[serde(default)]
    metadata: Metadata,
}

fn term_doc(t: &LocalOperator) -> TermDoc {
    TermDoc {
        qubits: t.support().to_vec(),
        matrix: t.block().to_vec(),
        dim: t.dim(),
        tag: t.tag().to_string(),
        random_bits: None,
        tables: None,
    }
}

fn schema(field: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        msg: msg.into(),
    }
}

fn term_from_doc(i: usize, d: &TermDoc) -> Result<LocalOperator> {
    if d.dim != 1usize << d.qubits.len() {
        return Err(schema(
            format!("terms[{i}].dim"),
            format!("{} does not match 2^{}", d.dim, d.qubits.len()),
        ));
    }
    check_matrix(&format!("terms[{i}].matrix"), &d.matrix, d.dim)?;
    LocalOperator::from_unsorted(&d.qubits, d.matrix.clone())
        .map(|t| t.with_tag(d.tag.clone()))
        .map_err(|e| schema(format!("terms[{i}]"), e.to_string()))
}

fn check_matrix(field: &str, m: &[f64], dim: usize) -> Result<()> {
    if m.len() != dim * dim {
        return Err(schema(
            field,
            format!("{} entries, expected {}", m.len(), dim * dim),
        ));
    }
    if let Some(v) = m.iter().find(|v| !v.is_finite()) {
        return Err(schema(field, format!("non-finite number {v}")));
    }
    Ok(())
}

/// Table key for assignment `idx` of `l` random bits: binary digits, the
/// highest-indexed random bit first.
pub(crate) fn assignment_key(idx: usize, l: usize) -> String {
    if l == 0 {
        String::new()
    } else {
        format!("{idx:0l$b}")
    }
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::StoqSat(_) => "stoq-sat",
            Instance::LhMin(_) => "lh-min",
            Instance::Ensemble(_) => "ensemble",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Instance::StoqSat(i) => i.n,
            Instance::LhMin(i) => i.n,
            Instance::Ensemble(i) => i.n,
        }
    }

    pub fn validate(&self) -> super::ValidationReport {
        match self {
            Instance::StoqSat(i) => i.validate(),
            Instance::LhMin(i) => i.validate(),
            Instance::Ensemble(i) => i.validate(),
        }
    }

    fn to_doc(&self) -> Doc {
        let mut doc = Doc {
            version: FORMAT_VERSION,
            kind: self.kind().to_string(),
            n: self.n(),
            m: None,
            epsilon: None,
            lambda_yes: None,
            lambda_no: None,
            terms: Vec::new(),
            metadata: Metadata::new(),
        };
        match self {
            Instance::StoqSat(i) => {
                doc.epsilon = i.epsilon;
                doc.terms = i.projectors.iter().map(term_doc).collect();
                doc.metadata = i.metadata.clone();
            }
            Instance::LhMin(i) => {
                doc.lambda_yes = i.lambda_yes;
                doc.lambda_no = i.lambda_no;
                doc.terms = i.terms.iter().map(term_doc).collect();
                doc.metadata = i.metadata.clone();
            }
            Instance::Ensemble(e) => {
                doc.m = Some(e.m);
                doc.lambda_yes = e.lambda_yes;
                doc.lambda_no = e.lambda_no;
                doc.metadata = e.metadata.clone();
                doc.terms = e
                    .terms
                    .iter()
                    .map(|t| {
                        let l = t.random_bits.len();
                        let mut d = term_doc(&t.tables[0]);
                        d.random_bits = Some(t.random_bits.clone());
                        d.tables = Some(
                            t.tables
                                .iter()
                                .enumerate()
                                .map(|(idx, b)| (assignment_key(idx, l), b.block().to_vec()))
                                .collect(),
                        );
                        d
                    })
                    .collect();
            }
        }
        doc
    }

    fn from_doc(doc: Doc) -> Result<Self> {
        let finite = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !x.is_finite() => Err(schema(name, format!("non-finite number {x}"))),
                _ => Ok(()),
            }
        };
        finite("epsilon", doc.epsilon)?;
        finite("lambda_yes", doc.lambda_yes)?;
        finite("lambda_no", doc.lambda_no)?;
        let inst = match doc.kind.as_str() {
            "stoq-sat" => {
                let projectors = doc
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| term_from_doc(i, t))
                    .collect::<Result<Vec<_>>>()?;
                Instance::StoqSat(StoqSatInstance {
                    n: doc.n,
                    epsilon: doc.epsilon,
                    projectors,
                    metadata: doc.metadata,
                })
            }
            "lh-min" => {
                let terms = doc
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| term_from_doc(i, t))
                    .collect::<Result<Vec<_>>>()?;
                Instance::LhMin(LhMinInstance {
                    n: doc.n,
                    terms,
                    lambda_yes: doc.lambda_yes,
                    lambda_no: doc.lambda_no,
                    metadata: doc.metadata,
                })
            }
            "ensemble" => {
                let m = doc.m.ok_or_else(|| schema("m", "ensembles require m"))?;
                let mut terms = Vec::with_capacity(doc.terms.len());
                for (i, t) in doc.terms.iter().enumerate() {
                    let bits = t
                        .random_bits
                        .clone()
                        .ok_or_else(|| schema(format!("terms[{i}].random_bits"), "missing"))?;
                    let tables = t
                        .tables
                        .as_ref()
                        .ok_or_else(|| schema(format!("terms[{i}].tables"), "missing"))?;
                    let l = bits.len();
                    if l > 16 {
                        return Err(schema(format!("terms[{i}].random_bits"), "too many bits"));
                    }
                    if tables.len() != 1usize << l {
                        return Err(schema(
                            format!("terms[{i}].tables"),
                            format!("{} rows for {l} random bits", tables.len()),
                        ));
                    }
                    let mut rows = Vec::with_capacity(tables.len());
                    for idx in 0..(1usize << l) {
                        let key = assignment_key(idx, l);
                        let field = format!("terms[{i}].tables[{key:?}]");
                        let row = tables
                            .get(&key)
                            .ok_or_else(|| schema(field.clone(), "missing row"))?;
                        check_matrix(&field, row, t.dim)?;
                        rows.push(row.clone());
                    }
                    if t.dim != 1usize << t.qubits.len() {
                        return Err(schema(format!("terms[{i}].dim"), "does not match qubits"));
                    }
                    let term = EnsembleTerm::new(t.qubits.clone(), bits, rows)
                        .map_err(|e| schema(format!("terms[{i}]"), e.to_string()))?;
                    terms.push(term);
                }
                Instance::Ensemble(DisorderEnsemble {
                    n: doc.n,
                    m,
                    terms,
                    lambda_yes: doc.lambda_yes,
                    lambda_no: doc.lambda_no,
                    metadata: doc.metadata,
                })
            }
            other => return Err(schema("kind", format!("unknown kind {other:?}"))),
        };
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Parses and validates; an instance with any violation is rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let version = value
            .get("version")
            .ok_or_else(|| schema("version", "missing"))?
            .as_u64()
            .ok_or_else(|| schema("version", "not an unsigned integer"))?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let doc: Doc =
            serde_json::from_value(value).map_err(|e| schema("document", e.to_string()))?;
        let inst = Self::from_doc(doc)?;
        inst.validate().into_result()?;
        Ok(inst)
    }
}

impl From<StoqSatInstance> for Instance {
    fn from(i: StoqSatInstance) -> Self {
        Instance::StoqSat(i)
    }
}

impl From<LhMinInstance> for Instance {
    fn from(i: LhMinInstance) -> Self {
        Instance::LhMin(i)
    }
}

impl From<DisorderEnsemble> for Instance {
    fn from(i: DisorderEnsemble) -> Self {
        Instance::Ensemble(i)
    }
}

pub fn save(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, instance.to_json())?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
    Instance::from_json(&fs::read_to_string(path)?)
}
