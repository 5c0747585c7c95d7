//! The random-walk Merlin-Arthur verifier for stoquastic k-SAT and its
//! Monte Carlo harness.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::{gather, BitString};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::instances::StoqSatInstance;
use crate::ops::{LocalOperator, OperatorSum};

/// Default tolerance for Steps 2, 6 and 10.
pub const ETA_WALK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkConfig {
    pub steps: usize,
    pub seed: u64,
    /// Total-variation distance of the simulated imperfect sampler from the
    /// exact transition law; `0` samples exactly.
    pub sampling_delta: f64,
    pub eta: f64,
}

impl WalkConfig {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            seed,
            sampling_delta: 0.0,
            eta: ETA_WALK,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.sampling_delta = delta;
        self
    }

    fn check(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Precondition("walk needs L >= 1".into()));
        }
        if !(self.sampling_delta >= 0.0 && self.sampling_delta <= 1.0) {
            return Err(Error::Precondition(
                "sampling_delta must lie in [0, 1]".into(),
            ));
        }
        if !(self.eta > 0.0) {
            return Err(Error::Precondition("eta_walk must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    DiagZero,
    Unnormalized,
    ProductExceedsOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Outcome {
    Accept,
    /// `step` is the protocol step number (2, 6 or 10).
    Reject {
        step: u8,
        reason: RejectReason,
    },
}

impl Outcome {
    pub fn accepted(&self) -> bool {
        matches!(self, Outcome::Accept)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkTranscript {
    pub witness: BitString,
    pub seed: u64,
    pub stream: u64,
    pub visited: Vec<BitString>,
    /// `log r_j` for each sampled step.
    pub log_r: Vec<f64>,
    pub log_r_sum: f64,
    pub outcome: Outcome,
    pub rng_draws: u64,
    /// Upper bound on the total-variation error of the floating-point
    /// sampler over the run (`|N(x)| 2^-53` per step).
    pub sampler_error: f64,
}

/// One candidate move out of `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub y: u64,
    pub g: f64,
    /// 0-based index of the projector chosen in Step 4.
    pub alpha: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transitions {
    pub entries: Vec<Transition>,
    pub sum: f64,
}

/// Cached per-string outcome of Steps 2-6.
#[derive(Debug)]
enum StepData {
    Reject(u8, RejectReason),
    Ready {
        ys: Vec<u64>,
        cdf: Vec<f64>,
        log_r: Vec<f64>,
    },
}

/// `G = (1/M) sum_a Pi_a`.
pub fn build_g(instance: &StoqSatInstance) -> Result<OperatorSum> {
    let m = instance.m();
    if m == 0 {
        return Err(Error::Precondition("instance has no projectors".into()));
    }
    OperatorSum::weighted(
        instance.n,
        instance.projectors.clone(),
        vec![1.0 / m as f64; m],
    )
}

/// Smallest `L >= 1` with `2^{n/2} (1 - eps/M)^L <= 1/3`.
pub fn required_steps(n: usize, epsilon: f64, m: usize) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Precondition(format!(
            "epsilon {epsilon} outside (0, 1]"
        )));
    }
    if m == 0 {
        return Err(Error::Precondition("M must be positive".into()));
    }
    let q = 1.0 - epsilon / m as f64;
    if q <= 0.0 {
        return Ok(1);
    }
    let target = (3.0f64).ln() + 0.5 * n as f64 * std::f64::consts::LN_2;
    let holds = |l: usize| -(l as f64) * q.ln() >= target;
    let mut l = ((target / -q.ln()).ceil() as usize).max(1);
    while l > 1 && holds(l - 1) {
        l -= 1;
    }
    while !holds(l) {
        l += 1;
    }
    Ok(l)
}

/// Verifier bound to one instance. Step results are memoized per string, so
/// repeated trials on the same instance only pay for Steps 2-6 once per
/// visited string.
pub struct Walker {
    n: usize,
    projectors: Vec<LocalOperator>,
    g: OperatorSum,
    eta: f64,
    cache: RwLock<HashMap<u64, Arc<StepData>>>,
}

impl Walker {
    pub fn new(instance: &StoqSatInstance) -> Result<Self> {
        Self::with_eta(instance, ETA_WALK)
    }

    pub fn with_eta(instance: &StoqSatInstance, eta: f64) -> Result<Self> {
        Ok(Self {
            n: instance.n,
            projectors: instance.projectors.clone(),
            g: build_g(instance)?,
            eta,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> &OperatorSum {
        &self.g
    }

    #[inline]
    fn pi(&self, a: usize, x: u64, y: u64) -> f64 {
        let t = &self.projectors[a];
        let mask = crate::bits::support_mask(t.support());
        if (x ^ y) & !mask != 0 {
            return 0.0;
        }
        t.entry(gather(x, t.support()), gather(y, t.support()))
    }

    fn check(&self, x: BitString) -> Result<()> {
        if x.n() != self.n {
            return Err(Error::Precondition(format!(
                "string has {} bits, instance has {} qubits",
                x.n(),
                self.n
            )));
        }
        Ok(())
    }

    /// Step 2: `<x|Pi_a|x> > eta` for every `a`.
    pub fn diagonal_ok(&self, x: u64) -> bool {
        (0..self.projectors.len()).all(|a| self.pi(a, x, x) > self.eta)
    }

    /// `N(x)`: every `y` with `G_xy > eta`, ascending.
    pub fn neighborhood(&self, x: BitString) -> Result<Vec<(BitString, f64)>> {
        self.check(x)?;
        Ok(self
            .neighbors(x.value())
            .into_iter()
            .map(|(y, g)| (x.with_value(y), g))
            .collect())
    }

    fn neighbors(&self, x: u64) -> Vec<(u64, f64)> {
        let eta = self.eta;
        let mut row = self.g.row(x);
        row.retain(|&(_, g)| g > eta);
        row
    }

    /// Steps 2-5 at `x`: Step 4 picks the smallest `alpha` with
    /// `<y|Pi_alpha|x> > eta`, Step 5 weighs `G_xy` by the amplitude ratio.
    /// No normalization is applied.
    pub fn transition_probabilities(
        &self,
        x: BitString,
    ) -> Result<std::result::Result<Transitions, RejectReason>> {
        self.check(x)?;
        Ok(self.transitions(x.value()))
    }

    fn transitions(&self, x: u64) -> std::result::Result<Transitions, RejectReason> {
        if !self.diagonal_ok(x) {
            return Err(RejectReason::DiagZero);
        }
        let mut entries = Vec::new();
        let mut sum = 0.0;
        for (y, g) in self.neighbors(x) {
            let Some(alpha) = (0..self.projectors.len()).find(|&a| self.pi(a, y, x) > self.eta)
            else {
                // G_xy > eta forces some term above eta; reaching this means
                // the instance is inconsistent
                return Err(RejectReason::Unnormalized);
            };
            let p = g * (self.pi(alpha, y, y) / self.pi(alpha, x, x)).sqrt();
            sum += p;
            entries.push(Transition { y, g, alpha, p });
        }
        Ok(Transitions { entries, sum })
    }

    fn step_data(&self, x: u64) -> Arc<StepData> {
        if let Some(d) = self.cache.read().expect("cache lock").get(&x) {
            return d.clone();
        }
        let data = match self.transitions(x) {
            Err(reason) => StepData::Reject(2, reason),
            Ok(t) => {
                let n_x = t.entries.len() as f64;
                if (t.sum - 1.0).abs() > self.eta * n_x || t.entries.iter().any(|e| e.p < 0.0) {
                    StepData::Reject(6, RejectReason::Unnormalized)
                } else {
                    let mut acc = 0.0;
                    let mut cdf = Vec::with_capacity(t.entries.len());
                    for e in &t.entries {
                        acc += e.p;
                        cdf.push(acc);
                    }
                    StepData::Ready {
                        ys: t.entries.iter().map(|e| e.y).collect(),
                        cdf,
                        log_r: t.entries.iter().map(|e| (e.p / e.g).ln()).collect(),
                    }
                }
            }
        };
        let data = Arc::new(data);
        self.cache
            .write()
            .expect("cache lock")
            .entry(x)
            .or_insert(data)
            .clone()
    }

    /// Runs Steps 1-11 with the RNG stream `stream` of `config.seed`.
    pub fn run(
        &self,
        witness: BitString,
        config: &WalkConfig,
        stream: u64,
    ) -> Result<WalkTranscript> {
        self.check(witness)?;
        config.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let mut t = WalkTranscript {
            witness,
            seed: config.seed,
            stream,
            visited: vec![witness],
            log_r: Vec::new(),
            log_r_sum: 0.0,
            outcome: Outcome::Accept,
            rng_draws: 0,
            sampler_error: 0.0,
        };
        let mut x = witness.value();
        for j in 0..=config.steps {
            let data = self.step_data(x);
            let (ys, cdf, log_r) = match &*data {
                StepData::Reject(step, reason) => {
                    t.outcome = Outcome::Reject {
                        step: *step,
                        reason: *reason,
                    };
                    return Ok(t);
                }
                StepData::Ready { ys, cdf, log_r } => (ys, cdf, log_r),
            };
            if j == config.steps {
                break;
            }
            let total = *cdf.last().expect("N(x) contains x after Step 2");
            let idx = if config.sampling_delta > 0.0 && {
                t.rng_draws += 1;
                rng.gen::<f64>() < config.sampling_delta / 2.0
            } {
                t.rng_draws += 1;
                rng.gen_range(0..ys.len())
            } else {
                t.rng_draws += 1;
                let u = rng.gen::<f64>() * total;
                cdf.partition_point(|&c| c <= u).min(ys.len() - 1)
            };
            t.sampler_error += ys.len() as f64 * f64::EPSILON / 2.0;
            t.log_r.push(log_r[idx]);
            t.log_r_sum += log_r[idx];
            x = ys[idx];
            t.visited.push(witness.with_value(x));
        }
        if t.log_r_sum > self.eta * config.steps as f64 {
            t.outcome = Outcome::Reject {
                step: 10,
                reason: RejectReason::ProductExceedsOne,
            };
        }
        Ok(t)
    }

    /// Majority vote over `repeats` independent walks, using streams
    /// `stream * repeats .. stream * repeats + repeats`.
    pub fn run_majority(
        &self,
        witness: BitString,
        config: &WalkConfig,
        stream: u64,
        repeats: u64,
    ) -> Result<bool> {
        let mut yes = 0;
        for i in 0..repeats {
            if self
                .run(witness, config, stream * repeats + i)?
                .outcome
                .accepted()
            {
                yes += 1;
            }
        }
        Ok(2 * yes > repeats)
    }

    /// `trials` independent runs (streams `0..trials`).
    pub fn acceptance_rate(
        &self,
        witness: BitString,
        trials: u64,
        config: &WalkConfig,
        exec: Exec,
    ) -> Result<RateReport> {
        let outcomes = self.trials(witness, trials, config, exec)?;
        let accepted = outcomes.iter().filter(|t| t.outcome.accepted()).count() as u64;
        Ok(RateReport::new(accepted, trials))
    }

    /// Transcripts of `trials` runs, in trial order.
    pub fn trials(
        &self,
        witness: BitString,
        trials: u64,
        config: &WalkConfig,
        exec: Exec,
    ) -> Result<Vec<WalkTranscript>> {
        if trials == 0 {
            return Err(Error::Precondition("trials must be >= 1".into()));
        }
        exec.map_range(trials as usize, |i| self.run(witness, config, i as u64))
            .into_iter()
            .collect()
    }
}

/// Convenience wrapper over [`Walker::run`] on stream 0.
pub fn run_walk(
    instance: &StoqSatInstance,
    witness: BitString,
    config: &WalkConfig,
) -> Result<WalkTranscript> {
    Walker::new(instance)?.run(witness, config, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub accepted: u64,
    pub trials: u64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

impl RateReport {
    pub fn new(accepted: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(accepted, trials, Z95);
        Self {
            accepted,
            trials,
            rate: accepted as f64 / trials as f64,
            wilson_low: lo,
            wilson_high: hi,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.wilson_high - self.wilson_low) / 2.0
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Dense soundness bound `2^{n/2} <x0|G^L|+>` (the row sums of `G^L`) for
/// every start string.
pub fn acceptance_upper_bounds(g: &OperatorSum, steps: usize, limit: usize) -> Result<Vec<f64>> {
    if g.n() > limit {
        return Err(Error::DenseLimit { n: g.n(), limit });
    }
    let csr = g.to_csr(limit)?;
    let mut v = vec![1.0; csr.dim()];
    let mut w = vec![0.0; csr.dim()];
    for _ in 0..steps {
        csr.matvec(&v, &mut w);
        std::mem::swap(&mut v, &mut w);
    }
    Ok(v)
}

/// Serializes transcripts as JSON lines, one run per line.
pub fn transcripts_to_jsonl(ts: &[WalkTranscript]) -> String {
    let mut out = String::new();
    for t in ts {
        out.push_str(&serde_json::to_string(t).expect("transcript serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::from_dimacs;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn bs(v: u64, n: usize) -> BitString {
        BitString::new(v, n).unwrap()
    }

    fn plus_instance(n: usize) -> StoqSatInstance {
        let ps = (0..n)
            .map(|q| LocalOperator::rank_one(vec![q], &[S, S]).unwrap())
            .collect();
        StoqSatInstance::new(n, Some(1.0), ps)
    }

    #[test]
    fn required_steps_examples() {
        assert_eq!(required_steps(1, 1.0, 1).unwrap(), 1);
        assert_eq!(required_steps(2, 0.5, 1).unwrap(), 3);
        assert_eq!(required_steps(10, 0.1, 10).unwrap(), 455);
        assert!(required_steps(3, 0.0, 1).is_err());
        // direct check of minimality
        let l = required_steps(7, 0.3, 4).unwrap();
        let f = |l: i32| 2f64.powf(3.5) * (1.0 - 0.3 / 4.0f64).powi(l);
        assert!(f(l as i32) <= 1.0 / 3.0 && f(l as i32 - 1) > 1.0 / 3.0);
    }

    #[test]
    fn build_g_weights() {
        let inst = plus_instance(1);
        let g = build_g(&inst).unwrap();
        assert_eq!(g.weights(), &[1.0]);
        let mut twice = inst.clone();
        twice.projectors.push(inst.projectors[0].clone());
        let g2 = build_g(&twice).unwrap();
        assert_eq!(g2.to_dense(14).unwrap(), g.to_dense(14).unwrap());
    }

    #[test]
    fn transitions_examples() {
        let w = Walker::new(&plus_instance(1)).unwrap();
        let t = w.transition_probabilities(bs(0, 1)).unwrap().unwrap();
        assert_eq!(t.entries.len(), 2);
        assert!((t.entries[0].p - 0.5).abs() < 1e-15 && (t.sum - 1.0).abs() < 1e-15);

        let r = 5f64.sqrt();
        let psi = [1.0 / r, 2.0 / r];
        let inst = StoqSatInstance::new(
            1,
            Some(1.0),
            vec![LocalOperator::rank_one(vec![0], &psi).unwrap()],
        );
        let t = Walker::new(&inst)
            .unwrap()
            .transition_probabilities(bs(0, 1))
            .unwrap()
            .unwrap();
        assert!((t.entries[0].p - 0.2).abs() < 1e-12);
        assert!((t.entries[1].p - 0.8).abs() < 1e-12);

        let inst = StoqSatInstance::new(
            1,
            Some(1.0),
            vec![
                LocalOperator::new(vec![0], vec![1., 0., 0., 0.]).unwrap(),
                LocalOperator::rank_one(vec![0], &[S, S]).unwrap(),
            ],
        );
        let w = Walker::new(&inst).unwrap();
        let t = w.transition_probabilities(bs(0, 1)).unwrap().unwrap();
        assert_eq!(t.entries[0].alpha, 0);
        assert_eq!(t.entries[1].alpha, 1);
        assert!((t.entries[0].p - 0.75).abs() < 1e-15);
        assert!((t.entries[1].p - 0.25).abs() < 1e-15);
        assert!((t.sum - 1.0).abs() <= ETA_WALK * 2.0);
        assert_eq!(
            w.transition_probabilities(bs(1, 1)).unwrap(),
            Err(RejectReason::DiagZero)
        );
    }

    #[test]
    fn satisfying_assignment_is_stationary() {
        let inst = from_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n").unwrap();
        let w = Walker::new(&inst).unwrap();
        let x = bs(0b011, 3);
        let t = w.run(x, &WalkConfig::new(20, 3), 0).unwrap();
        assert!(t.outcome.accepted());
        assert_eq!(t.visited.len(), 21);
        assert!(t.visited.iter().all(|&v| v == x));
        assert_eq!(w.neighborhood(x).unwrap(), vec![(x, 1.0)]);
        // violating assignment x1=0, x2=1 fails Step 2
        let bad = w.run(bs(0b010, 3), &WalkConfig::new(20, 3), 0).unwrap();
        assert_eq!(
            bad.outcome,
            Outcome::Reject {
                step: 2,
                reason: RejectReason::DiagZero
            }
        );
    }

    #[test]
    fn plus_instance_always_accepts() {
        let inst = plus_instance(4);
        let w = Walker::new(&inst).unwrap();
        let cfg = WalkConfig::new(50, 11);
        let rep = w
            .acceptance_rate(bs(0, 4), 300, &cfg, Exec::default())
            .unwrap();
        assert_eq!(rep.rate, 1.0);
        let again = w
            .acceptance_rate(bs(0, 4), 300, &cfg, Exec::Sequential)
            .unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532).abs() < 1e-5);
        let (lo, hi) = wilson_interval(5, 10, Z95);
        assert!((lo - 0.236_593).abs() < 1e-5 && (hi - 0.763_407).abs() < 1e-5);
    }

    #[test]
    fn transcript_json_line() {
        let inst = plus_instance(1);
        let t = run_walk(&inst, bs(0, 1), &WalkConfig::new(2, 0)).unwrap();
        let line = transcripts_to_jsonl(&[t]);
        assert!(line.contains("\"result\":\"accept\""));
        assert!(line.contains("\"visited\":[\"0b"));
    }
}
