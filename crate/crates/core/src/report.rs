//! CSV rendering of run results. Floats use `{:.16e}` so identical runs give
//! identical bytes.

use std::fmt::Write;

use crate::estimators::{EnsembleStats, TraceReport};
use crate::walk::{Outcome, WalkTranscript};

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// One row per walk: trial stream, witness, outcome and `sum log r_j`.
pub fn walk_csv(ts: &[WalkTranscript]) -> String {
    let mut out = String::from("trial,witness,accepted,reject_step,steps_taken,log_r_sum\n");
    for t in ts {
        let step = match t.outcome {
            Outcome::Accept => String::new(),
            Outcome::Reject { step, .. } => step.to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.stream,
            t.witness.to_binary(),
            t.outcome.accepted() as u8,
            step,
            t.log_r.len(),
            float(t.log_r_sum)
        )
        .expect("write to string");
    }
    out
}

pub fn trace_csv(rows: &[(String, TraceReport)]) -> String {
    let mut out =
        String::from("fixture,l,mode,value,stderr,paths,mu_yes,mu_no,bound_yes,bound_no\n");
    for (name, r) in rows {
        let mode = match r.mode {
            crate::estimators::TraceMode::Exact => "exact",
            crate::estimators::TraceMode::Sampled => "sampled",
        };
        writeln!(
            out,
            "{name},{},{mode},{},{},{},{},{},{},{}",
            r.l,
            float(r.value),
            float(r.stderr),
            r.paths,
            opt(r.mu_yes),
            opt(r.mu_no),
            opt(r.bound_yes),
            opt(r.bound_no)
        )
        .expect("write to string");
    }
    out
}

/// Per-sample rows then one `summary` row carrying mean, std and the
/// decision; `runtime_ms` stays empty unless `timing` is set.
pub fn ensemble_csv(stats: &EnsembleStats, decision: Option<&str>, timing: bool) -> String {
    let mut out = String::from("sample_index,r,lambda,runtime_ms,mean,std,decision\n");
    for s in &stats.per_sample {
        let t = if timing {
            format!("{:.3}", s.runtime_ms)
        } else {
            String::new()
        };
        writeln!(out, "{},{},{},{t},,,", s.index, s.r_hex(), float(s.lambda))
            .expect("write to string");
    }
    writeln!(
        out,
        "summary,,,,{},{},{}",
        float(stats.mean),
        float(stats.std),
        decision.unwrap_or("")
    )
    .expect("write to string");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EnsembleSample;

    #[test]
    fn ensemble_rows() {
        let stats = EnsembleStats {
            samples: 1,
            replicas: 1,
            mean: -1.0,
            std: 0.0,
            per_sample: vec![EnsembleSample {
                index: 0,
                r: vec![true, false, true, true, true],
                lambda: -1.0,
                runtime_ms: 2.5,
            }],
        };
        assert_eq!(
            ensemble_csv(&stats, Some("yes"), false),
            "sample_index,r,lambda,runtime_ms,mean,std,decision\n0,1d,-1.0000000000000000e0,,,,\n\
             summary,,,,-1.0000000000000000e0,0.0000000000000000e0,yes\n"
        );
        assert!(ensemble_csv(&stats, None, true).contains(",2.500,"));
    }
}
