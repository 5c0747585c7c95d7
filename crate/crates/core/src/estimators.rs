//! The trace functional `tr(G^L)` of a shifted stoquastic Hamiltonian and
//! disorder-averaged ground energies with replicas.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::instances::{Cnf, DisorderEnsemble, EnsembleTerm, LhMinInstance};
use crate::ops::{LocalOperator, OperatorSum};
use crate::spectral::{eigenvalues, extreme_eigenvalue, PowerOptions, Which};

/// `G = (I - H/p) / 2` as an operator sum, with `p = 1 + sum_a 2^{k_a} max|H_a|`.
pub fn sbp_matrix(h: &LhMinInstance) -> Result<(OperatorSum, f64)> {
    let p = 1.0
        + h.terms
            .iter()
            .map(|t| (1u64 << t.locality()) as f64 * t.max_abs_entry())
            .sum::<f64>();
    let mut terms = vec![LocalOperator::scalar(0.5).with_tag("identity")];
    let mut weights = vec![1.0];
    for t in &h.terms {
        terms.push(t.clone());
        weights.push(-0.5 / p);
    }
    Ok((OperatorSum::weighted(h.n, terms, weights)?, p))
}

/// `mu = (1 - lambda/p) / 2`.
pub fn sbp_mu(lambda: f64, p: f64) -> f64 {
    0.5 * (1.0 - lambda / p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SbpBounds {
    pub mu_yes: f64,
    pub mu_no: f64,
    pub l: usize,
}

/// Thresholds `mu` and the smallest `L` with `2^n (mu_no/mu_yes)^L <= target_ratio`.
pub fn sbp_bounds(
    lambda_yes: f64,
    lambda_no: f64,
    p: f64,
    n: usize,
    target_ratio: f64,
) -> Result<SbpBounds> {
    if !(lambda_yes < lambda_no) {
        return Err(Error::Precondition(format!(
            "thresholds inverted: lambda_yes {lambda_yes} >= lambda_no {lambda_no}"
        )));
    }
    if p < lambda_yes.abs().max(lambda_no.abs()) {
        return Err(Error::Precondition(format!(
            "p = {p} below the threshold magnitudes"
        )));
    }
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(Error::Precondition(format!(
            "target ratio {target_ratio} outside (0, 1)"
        )));
    }
    let mu_yes = sbp_mu(lambda_yes, p);
    let mu_no = sbp_mu(lambda_no, p);
    if !(mu_no < mu_yes) || mu_no < 0.0 {
        return Err(Error::Precondition(format!(
            "mu_no {mu_no} not below mu_yes {mu_yes}"
        )));
    }
    let holds = |l: usize| {
        n as f64 * std::f64::consts::LN_2 + l as f64 * (mu_no / mu_yes).ln()
            <= target_ratio.ln() + 1e-12
    };
    let mut l = 1usize;
    while !holds(l) {
        l += 1;
        if l > 1 << 40 {
            return Err(Error::Ceiling(
                "no L up to 2^40 reaches the target ratio".into(),
            ));
        }
    }
    Ok(SbpBounds { mu_yes, mu_no, l })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub l: usize,
    pub mode: TraceMode,
    pub value: f64,
    /// Standard error of a sampled estimate; zero in exact mode.
    pub stderr: f64,
    pub paths: usize,
    pub mu_yes: Option<f64>,
    pub mu_no: Option<f64>,
    /// `mu_yes^L`.
    pub bound_yes: Option<f64>,
    /// `2^n mu_no^L`.
    pub bound_no: Option<f64>,
}

impl TraceReport {
    fn new(l: usize, mode: TraceMode, value: f64, stderr: f64, paths: usize) -> Self {
        Self {
            l,
            mode,
            value,
            stderr,
            paths,
            mu_yes: None,
            mu_no: None,
            bound_yes: None,
            bound_no: None,
        }
    }

    /// Attaches `mu` thresholds and the bounds they imply on `n` qubits.
    pub fn with_thresholds(mut self, mu_yes: f64, mu_no: f64, n: usize) -> Self {
        self.mu_yes = Some(mu_yes);
        self.mu_no = Some(mu_no);
        self.bound_yes = Some(mu_yes.powi(self.l as i32));
        self.bound_no = Some((2f64).powi(n as i32) * mu_no.powi(self.l as i32));
        self
    }
}

/// `tr(G^L)` by repeated squaring of the dense matrix.
pub fn trace_power_exact(g: &OperatorSum, l: usize, limit: usize) -> Result<TraceReport> {
    if l == 0 {
        return Err(Error::Precondition("L must be at least 1".into()));
    }
    let m = g.to_dense(limit)?;
    let mut result: Option<DMatrix<f64>> = None;
    let mut base = m;
    let mut e = l;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => &r * &base,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
    }
    let value = result.expect("l >= 1").trace();
    Ok(TraceReport::new(l, TraceMode::Exact, value, 0.0, 0))
}

/// Unbiased estimate of `tr(G^L)` from closed paths: `x_0` uniform, each
/// next string drawn from the current row of `G` in proportion to its
/// entries, weighted by `2^n * prod(row sums) * G[x_{L-1}, x_0]`. Path `i`
/// uses ChaCha8 stream `i` of `seed`.
pub fn trace_power_sampled(
    g: &OperatorSum,
    l: usize,
    paths: usize,
    seed: u64,
    exec: Exec,
) -> Result<TraceReport> {
    if l == 0 || paths < 2 {
        return Err(Error::Precondition(
            "need L >= 1 and at least 2 paths".into(),
        ));
    }
    if g.n() > 63 {
        return Err(Error::DenseLimit {
            n: g.n(),
            limit: 63,
        });
    }
    let mask = if g.n() == 0 {
        0
    } else {
        u64::MAX >> (64 - g.n())
    };
    let scale = (2f64).powi(g.n() as i32);
    let weights: Vec<f64> = exec.map_range(paths, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let x0 = rng.gen::<u64>() & mask;
        let mut x = x0;
        let mut w = scale;
        for _ in 0..l - 1 {
            let row = g.row(x);
            let total: f64 = row.iter().map(|(_, v)| v).sum();
            if total <= 0.0 {
                return 0.0;
            }
            w *= total;
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut next = row.last().expect("nonempty row").0;
            for &(y, v) in &row {
                acc += v;
                if u < acc {
                    next = y;
                    break;
                }
            }
            x = next;
        }
        w * g.element(x, x0)
    });
    let n = paths as f64;
    let mean = weights.iter().sum::<f64>() / n;
    let var = weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(TraceReport::new(
        l,
        TraceMode::Sampled,
        mean,
        (var / n).sqrt(),
        paths,
    ))
}

/// `N` independent copies on disjoint qubits and random bits, each term
/// weighted by `1/N`.
pub fn replica_ensemble(ens: &DisorderEnsemble, replicas: usize) -> Result<DisorderEnsemble> {
    if replicas == 0 {
        return Err(Error::Precondition("need at least one replica".into()));
    }
    if replicas == 1 {
        return Ok(ens.clone());
    }
    let qubits = ens
        .n
        .checked_mul(replicas)
        .filter(|&q| q <= MAX_REPLICA_QUBITS);
    let Some(qubits) = qubits else {
        return Err(Error::Ceiling(format!(
            "{replicas} replicas of {} qubits exceed {MAX_REPLICA_QUBITS}",
            ens.n
        )));
    };
    let s = 1.0 / replicas as f64;
    let mut terms = Vec::with_capacity(ens.terms.len() * replicas);
    for j in 0..replicas {
        for t in &ens.terms {
            let support: Vec<usize> = t.support.iter().map(|q| q + j * ens.n).collect();
            let random_bits = t.random_bits.iter().map(|b| b + j * ens.m).collect();
            let tables = t
                .tables
                .iter()
                .map(|b| b.block().iter().map(|v| v * s).collect())
                .collect();
            terms.push(EnsembleTerm::new(support, random_bits, tables)?);
        }
    }
    let mut out = DisorderEnsemble::new(qubits, ens.m * replicas, terms);
    out.lambda_yes = ens.lambda_yes;
    out.lambda_no = ens.lambda_no;
    out.metadata = ens.metadata.clone();
    out.metadata.insert("replicas".into(), json!(replicas));
    Ok(out)
}

/// Qubit ceiling for replica ensembles; realized instances are only ever
/// solved component by component.
pub const MAX_REPLICA_QUBITS: usize = 1 << 24;

/// Largest connected component the clustered solver will diagonalize.
pub const MAX_COMPONENT_QUBITS: usize = 30;

/// Ground energy of a sum of local terms, solved per connected component of
/// the interaction graph. Identical components (up to relabeling) are
/// solved once through `cache`.
pub struct ClusteredSolver {
    dense_limit: usize,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
}

impl ClusteredSolver {
    pub fn new(dense_limit: usize) -> Self {
        Self {
            dense_limit,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn lambda_min(&self, h: &LhMinInstance) -> Result<f64> {
        let mut parent: Vec<usize> = (0..h.n).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        let mut constant = 0.0;
        for t in &h.terms {
            let s = t.support();
            if let Some(&q) = s.iter().find(|&&q| q >= h.n) {
                return Err(Error::QubitOutOfRange { index: q, n: h.n });
            }
            if s.is_empty() {
                constant += t.entry(0, 0);
                continue;
            }
            let r0 = find(&mut parent, s[0]);
            for &q in &s[1..] {
                let r = find(&mut parent, q);
                parent[r] = r0;
            }
        }
        let mut groups: HashMap<usize, Vec<&LocalOperator>> = HashMap::new();
        for t in &h.terms {
            if let Some(&q) = t.support().first() {
                let r = find(&mut parent, q);
                groups.entry(r).or_default().push(t);
            }
        }
        let mut roots: Vec<usize> = groups.keys().copied().collect();
        roots.sort_unstable();
        let mut total = constant;
        for r in roots {
            total += self.component(&groups[&r])?;
        }
        Ok(total)
    }

    fn component(&self, terms: &[&LocalOperator]) -> Result<f64> {
        let mut qubits: Vec<usize> = terms
            .iter()
            .flat_map(|t| t.support().iter().copied())
            .collect();
        qubits.sort_unstable();
        qubits.dedup();
        let local = |q: usize| qubits.binary_search(&q).expect("component qubit");
        let mut key = vec![qubits.len() as u64];
        let mut relabeled = Vec::with_capacity(terms.len());
        for t in terms {
            let support: Vec<usize> = t.support().iter().map(|&q| local(q)).collect();
            key.push(support.len() as u64);
            key.extend(support.iter().map(|&q| q as u64));
            key.extend(t.block().iter().map(|v| v.to_bits()));
            relabeled.push(LocalOperator::new(support, t.block().to_vec())?);
        }
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let k = qubits.len();
        let op = OperatorSum::new(k, relabeled)?;
        let value = if k <= self.dense_limit {
            eigenvalues(&op.to_dense(self.dense_limit)?)[0]
        } else if k <= MAX_COMPONENT_QUBITS {
            extreme_eigenvalue(&op, Which::Min, &PowerOptions::default())?.value
        } else {
            return Err(Error::Ceiling(format!(
                "connected component of {k} qubits exceeds {MAX_COMPONENT_QUBITS}"
            )));
        };
        self.cache.lock().expect("cache lock").insert(key, value);
        Ok(value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSample {
    pub index: usize,
    /// Random bits, bit `i` of word `i / 64`.
    pub r: Vec<bool>,
    pub lambda: f64,
    pub runtime_ms: f64,
}

impl EnsembleSample {
    /// `r` as hexadecimal, random bit 0 in the lowest position.
    pub fn r_hex(&self) -> String {
        if self.r.is_empty() {
            return "0".into();
        }
        let digits: Vec<char> = self
            .r
            .chunks(4)
            .map(|c| {
                let v = c
                    .iter()
                    .enumerate()
                    .fold(0u32, |a, (i, &b)| a | ((b as u32) << i));
                char::from_digit(v, 16).expect("hex digit")
            })
            .rev()
            .collect();
        digits.into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub samples: usize,
    pub replicas: usize,
    pub mean: f64,
    pub std: f64,
    pub per_sample: Vec<EnsembleSample>,
}

impl EnsembleStats {
    pub fn lambdas(&self) -> Vec<f64> {
        self.per_sample.iter().map(|s| s.lambda).collect()
    }
}

/// Random bits of sample `index` under `seed`.
pub fn sample_bits(seed: u64, index: usize, m: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..m).map(|_| rng.gen::<bool>()).collect()
}

/// Draws `samples` assignments `r` (sample `i` from ChaCha8 stream `i` of
/// `seed`) and solves `lambda(r)` for each.
pub fn lambda_stats(
    ens: &DisorderEnsemble,
    samples: usize,
    seed: u64,
    solver: &ClusteredSolver,
    exec: Exec,
) -> Result<EnsembleStats> {
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let results: Vec<Result<EnsembleSample>> = exec.map_range(samples, |i| {
        let start = Instant::now();
        let r = sample_bits(seed, i, ens.m);
        let lambda = solver
            .lambda_min(&ens.realize(&r)?)
            .map_err(|e| Error::Precondition(format!("sample {i}: {e}")))?;
        Ok(EnsembleSample {
            index: i,
            r,
            lambda,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    });
    let per_sample = results.into_iter().collect::<Result<Vec<_>>>()?;
    let n = samples as f64;
    let mean = per_sample.iter().map(|s| s.lambda).sum::<f64>() / n;
    let std = if samples > 1 {
        (per_sample
            .iter()
            .map(|s| (s.lambda - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    } else {
        0.0
    };
    let replicas = ens
        .metadata
        .get("replicas")
        .and_then(|v| v.as_u64())
        .unwrap_or(1) as usize;
    Ok(EnsembleStats {
        samples,
        replicas,
        mean,
        std,
        per_sample,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Yes,
    No,
    Inconclusive,
}

/// Constants of the replica decision rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AvConfig {
    pub pilot_samples: usize,
    /// Target `sigma' <= (lambda_no - lambda_yes) / margin_divisor`.
    pub margin_divisor: f64,
    /// Thresholds are shifted by `sigma_factor * sigma'`.
    pub sigma_factor: f64,
    pub confidence: f64,
    pub max_replicas: usize,
}

impl Default for AvConfig {
    fn default() -> Self {
        Self {
            pilot_samples: 30,
            margin_divisor: 100.0,
            sigma_factor: 10.0,
            confidence: 0.99,
            max_replicas: 1 << 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AvReport {
    pub decision: Decision,
    pub replicas: usize,
    pub pilot_std: f64,
    pub lambda_yes_shifted: f64,
    pub lambda_no_shifted: f64,
    pub fraction_yes: f64,
    pub fraction_no: f64,
    pub stats: EnsembleStats,
}

/// Pilot run for `sigma`, replica count `N = ceil((sigma / target)^2)`, then
/// `samples` replica draws classified against `lambda_yes + c sigma'` and
/// `lambda_no - c sigma'` with `sigma' = sigma / sqrt(N)`.
pub fn av_decide(
    ens: &DisorderEnsemble,
    lambda_yes: f64,
    lambda_no: f64,
    samples: usize,
    seed: u64,
    cfg: &AvConfig,
    solver: &ClusteredSolver,
    exec: Exec,
) -> Result<AvReport> {
    if !(lambda_no - lambda_yes > 0.0) {
        return Err(Error::Precondition(format!(
            "lambda_no - lambda_yes must be positive (got {lambda_yes}, {lambda_no})"
        )));
    }
    let pilot = lambda_stats(ens, cfg.pilot_samples.max(2), seed, solver, exec)?;
    let target = (lambda_no - lambda_yes) / cfg.margin_divisor;
    let replicas = ((pilot.std / target).powi(2).ceil() as usize).max(1);
    if replicas > cfg.max_replicas || replicas.saturating_mul(ens.n) > MAX_REPLICA_QUBITS {
        return Err(Error::Ceiling(format!(
            "decision needs N = {replicas} replicas (limit {})",
            cfg.max_replicas
        )));
    }
    let rep = replica_ensemble(ens, replicas)?;
    let stats = lambda_stats(&rep, samples, seed.wrapping_add(1), solver, exec)?;
    let sigma_prime = pilot.std / (replicas as f64).sqrt();
    let lambda_yes_shifted = lambda_yes + cfg.sigma_factor * sigma_prime;
    let lambda_no_shifted = lambda_no - cfg.sigma_factor * sigma_prime;
    let n = samples as f64;
    let fraction_yes = stats
        .per_sample
        .iter()
        .filter(|s| s.lambda <= lambda_yes_shifted)
        .count() as f64
        / n;
    let fraction_no = stats
        .per_sample
        .iter()
        .filter(|s| s.lambda >= lambda_no_shifted)
        .count() as f64
        / n;
    let decision = if fraction_yes >= cfg.confidence {
        Decision::Yes
    } else if fraction_no >= cfg.confidence {
        Decision::No
    } else {
        Decision::Inconclusive
    };
    Ok(AvReport {
        decision,
        replicas,
        pilot_std: pilot.std,
        lambda_yes_shifted,
        lambda_no_shifted,
        fraction_yes,
        fraction_no,
        stats,
    })
}

/// Diagonal ensemble from a CNF whose first `q_bits` variables are random:
/// each clause becomes the projector onto its violating assignments of the
/// remaining variables, or zero when its random literal is satisfied.
pub fn cnf_ensemble(cnf: &Cnf, q_bits: usize) -> Result<DisorderEnsemble> {
    if q_bits > cnf.num_vars {
        return Err(Error::Precondition(format!(
            "{q_bits} random bits but only {} variables",
            cnf.num_vars
        )));
    }
    let n = cnf.num_vars - q_bits;
    let mut terms = Vec::new();
    let mut skipped = 0usize;
    for (ci, clause) in cnf.clauses.iter().enumerate() {
        let mut q_lits: Vec<i64> = clause
            .iter()
            .copied()
            .filter(|l| (l.unsigned_abs() as usize) <= q_bits)
            .collect();
        q_lits.sort_unstable();
        q_lits.dedup();
        let mut q_vars: Vec<u64> = q_lits.iter().map(|l| l.unsigned_abs()).collect();
        q_vars.dedup();
        if q_vars.len() > 1 {
            return Err(Error::Precondition(format!(
                "clause {} touches {} random bits",
                ci + 1,
                q_vars.len()
            )));
        }
        let w: Vec<i64> = clause
            .iter()
            .copied()
            .filter(|l| (l.unsigned_abs() as usize) > q_bits)
            .collect();
        let Some((vars, violating)) = violation(&w) else {
            skipped += 1;
            continue;
        };
        if vars.len() > 3 {
            return Err(Error::Precondition(format!(
                "clause {} has {} non-random variables",
                ci + 1,
                vars.len()
            )));
        }
        if q_lits.len() == 2 {
            // q and not q: always satisfied
            skipped += 1;
            continue;
        }
        let support: Vec<usize> = vars.iter().map(|v| v - q_bits).collect();
        let dim = 1usize << support.len();
        let mut violated = vec![0.0; dim * dim];
        violated[violating * dim + violating] = 1.0;
        let zero = vec![0.0; dim * dim];
        let (random_bits, tables) = match q_lits.first() {
            None => (vec![], vec![violated]),
            Some(&l) => {
                let bit = l.unsigned_abs() as usize - 1;
                // table index = value of the random bit
                let tables = if l > 0 {
                    vec![violated, zero]
                } else {
                    vec![zero, violated]
                };
                (vec![bit], tables)
            }
        };
        terms.push(EnsembleTerm::new(support, random_bits, tables)?);
    }
    let mut ens = DisorderEnsemble::new(n, q_bits, terms);
    ens.metadata.insert("source".into(), json!("cnf-ensemble"));
    ens.metadata
        .insert("clauses".into(), json!(cnf.clauses.len()));
    if skipped > 0 {
        ens.metadata
            .insert("skipped_tautologies".into(), json!(skipped));
    }
    Ok(ens)
}

/// Distinct 1-based variables of a literal list and the violating local
/// assignment, or `None` when the literals contain `v` and `-v`.
fn violation(lits: &[i64]) -> Option<(Vec<usize>, usize)> {
    let mut vars: Vec<usize> = lits.iter().map(|l| l.unsigned_abs() as usize).collect();
    vars.sort_unstable();
    vars.dedup();
    let mut violating = 0;
    for (i, &v) in vars.iter().enumerate() {
        let pos = lits.contains(&(v as i64));
        let neg = lits.contains(&-(v as i64));
        if pos && neg {
            return None;
        }
        if neg {
            violating |= 1 << i;
        }
    }
    Some((vars.iter().map(|v| v - 1).collect(), violating))
}
