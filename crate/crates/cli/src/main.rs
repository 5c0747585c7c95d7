//! `stoq`: batch front end over the workbench.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use stoq_core::bits::BitString;
use stoq_core::circuits::{hamiltonian_to_verifier_with, VerifierCircuit, MAX_SELECTOR_BITS};
use stoq_core::clock::ClockInstance;
use stoq_core::error::Error;
use stoq_core::estimators::{
    av_decide, cnf_ensemble, lambda_stats, replica_ensemble, sbp_bounds, sbp_matrix,
    trace_power_exact, trace_power_sampled, AvConfig, ClusteredSolver, Decision,
};
use stoq_core::exec::Exec;
use stoq_core::instances::{
    from_dimacs, planted_product_instance, random_projector_instance,
    random_stoquastic_hamiltonian, Cnf, GridSpec, Instance, LhMinInstance, StoqSatInstance,
};
use stoq_core::prover::{adversarial_witnesses, honest_witness, AdversaryMode};
use stoq_core::report::{ensemble_csv, float, trace_csv};
use stoq_core::spectral::{eigenvalues, extreme_eigenvalue, gap_of, PowerOptions, Which};
use stoq_core::walk::{required_steps, transcripts_to_jsonl, WalkConfig, Walker};

const DEFAULT_DENSE_LIMIT: usize = 14;
const DEGENERACY: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "stoq", version, about = "Stoquastic satisfiability workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file.
    #[command(subcommand)]
    Gen(Gen),
    /// Circuit to clock Hamiltonian or 6-SAT, or Hamiltonian to verifier circuit.
    Compile(CompileArgs),
    /// Extreme eigenvalues, gap and ground-space dimension.
    Spectrum(SpectrumArgs),
    /// Honest witness of a stoquastic SAT instance.
    Prove(ProveArgs),
    /// Run the random-walk verifier.
    Verify(VerifyArgs),
    /// tr(G^L) for an LH-MIN instance.
    Trace(TraceArgs),
    /// Replica statistics and the averaged decision for an ensemble.
    Ensemble(EnsembleArgs),
}

#[derive(Args)]
struct Out {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Gen {
    /// DIMACS CNF to diagonal stoquastic SAT.
    FromDimacs {
        path: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Random non-negative projector instance.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        /// Plant a product state every projector preserves.
        #[arg(long)]
        planted: bool,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        out: Out,
    },
    /// Random 2-local stoquastic Hamiltonian.
    Stoquastic {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        terms: usize,
        #[arg(long)]
        seed: u64,
        /// Draw entries from the grid of multiples of 2^-bits.
        #[arg(long)]
        dyadic: Option<u32>,
        #[arg(long, requires = "lambda_no")]
        lambda_yes: Option<f64>,
        #[arg(long, requires = "lambda_yes")]
        lambda_no: Option<f64>,
        #[command(flatten)]
        out: Out,
    },
    /// CNF whose first variables are random bits to a disorder ensemble.
    CnfEnsemble {
        path: PathBuf,
        #[arg(long)]
        q_bits: usize,
        #[arg(long, requires = "lambda_no")]
        lambda_yes: Option<f64>,
        #[arg(long, requires = "lambda_yes")]
        lambda_no: Option<f64>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Clock,
    #[value(name = "6sat")]
    SixSat,
    Verifier,
}

#[derive(Args)]
struct CompileArgs {
    /// Circuit file (clock, 6sat) or LH-MIN instance (verifier).
    input: Option<PathBuf>,
    #[arg(long, conflicts_with = "input")]
    circuit: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["input", "circuit"])]
    instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    to: Target,
    /// Classical input x of the circuit.
    #[arg(long, default_value = "0")]
    x: String,
    /// Add delta times the measurement term to the clock Hamiltonian.
    #[arg(long)]
    delta: Option<f64>,
    /// Soundness parameter for the 6-SAT export; derived from the spectrum when absent.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Selector-bit cap for the verifier mixture.
    #[arg(long, default_value_t = MAX_SELECTOR_BITS)]
    max_bits: usize,
    #[command(flatten)]
    out: Out,
}

#[derive(Args)]
struct SpectrumArgs {
    input: Option<PathBuf>,
    #[arg(long, conflicts_with = "input")]
    instance: Option<PathBuf>,
    /// Analyse the clock Hamiltonian of this circuit.
    #[arg(long, conflicts_with_all = ["input", "instance"])]
    circuit: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    x: String,
    #[command(flatten)]
    out: Out,
}

#[derive(Args)]
struct ProveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    out: Out,
}

#[derive(Args)]
struct Jobs {
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl Jobs {
    fn exec(&self) -> Exec {
        if self.jobs == 1 {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Basis string (0b..., 0x..., decimal), a witness file from `prove`, or `all`.
    #[arg(long)]
    witness: String,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Walk length; defaults to the required length from the instance epsilon.
    #[arg(long)]
    steps: Option<usize>,
    /// Total-variation error of the simulated sampler.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Also write every run as JSON lines.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
    #[command(flatten)]
    out: Out,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceModeArg {
    Exact,
    Sampled,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Power L; defaults to the bound from the instance thresholds.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    mode: TraceModeArg,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    /// Required in sampled mode.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, requires = "lambda_no")]
    lambda_yes: Option<f64>,
    #[arg(long, requires = "lambda_yes")]
    lambda_no: Option<f64>,
    #[command(flatten)]
    jobs: Jobs,
    #[command(flatten)]
    out: Out,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Fixed replica count for the statistics run.
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    /// Choose N from a pilot run and classify against the thresholds.
    #[arg(long)]
    decide: bool,
    #[arg(long, requires = "lambda_no")]
    lambda_yes: Option<f64>,
    #[arg(long, requires = "lambda_yes")]
    lambda_no: Option<f64>,
    /// Fill the runtime_ms column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    jobs: Jobs,
    #[command(flatten)]
    out: Out,
}

/// Failures mapped to exit code 1.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

/// Collects what the manifest sidecar records.
struct Run {
    started: Instant,
    started_unix_ms: u128,
    inputs: Vec<(PathBuf, String)>,
    seed: Option<u64>,
}

impl Run {
    fn new() -> Self {
        Self {
            started: Instant::now(),
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            inputs: Vec::new(),
            seed: None,
        }
    }

    fn read(&mut self, path: &Path) -> Res<String> {
        let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push((path.to_path_buf(), hex));
        String::from_utf8(bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))
    }

    fn instance(&mut self, path: &Path) -> Res<Instance> {
        let text = self.read(path)?;
        Instance::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
    }

    fn circuit(&mut self, path: &Path) -> Res<VerifierCircuit> {
        let text = self.read(path)?;
        VerifierCircuit::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
    }

    /// Writes `text` to `out` (plus the manifest sidecar) or to stdout.
    fn emit(&self, out: &Out, text: &str) -> Res<()> {
        match &out.out {
            None => print!("{text}"),
            Some(path) => {
                fs::write(path, text)?;
                let manifest = json!({
                    "tool": "stoq",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command_line": std::env::args().collect::<Vec<_>>(),
                    "inputs": self.inputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
                    "seed": self.seed,
                    "started_unix_ms": self.started_unix_ms as u64,
                    "wall_clock_ms": self.started.elapsed().as_secs_f64() * 1e3,
                    "outputs": [path],
                });
                let mut side = path.clone().into_os_string();
                side.push(".manifest.json");
                fs::write(
                    side,
                    serde_json::to_string_pretty(&manifest).expect("json") + "\n",
                )?;
            }
        }
        Ok(())
    }
}

fn dense_limit() -> Res<usize> {
    match std::env::var("STOQ_DENSE_LIMIT") {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure(format!(
                "STOQ_DENSE_LIMIT={v:?} is not a non-negative integer"
            ))
        }),
        Err(_) => Ok(DEFAULT_DENSE_LIMIT),
    }
}

fn want_stoq_sat(inst: Instance) -> Res<StoqSatInstance> {
    match inst {
        Instance::StoqSat(i) => Ok(i),
        other => Err(Failure(format!(
            "expected a stoq-sat instance, got {}",
            other.kind()
        ))),
    }
}

fn want_lh_min(inst: Instance) -> Res<LhMinInstance> {
    match inst {
        Instance::LhMin(i) => Ok(i),
        other => Err(Failure(format!(
            "expected an lh-min instance, got {}",
            other.kind()
        ))),
    }
}

fn warn(inst: &Instance) {
    for w in inst.validate().warnings {
        eprintln!("warning: {w}");
    }
}

fn pick<'a>(options: &[&'a Option<PathBuf>], what: &str) -> Res<&'a PathBuf> {
    options
        .iter()
        .find_map(|o| o.as_ref())
        .ok_or_else(|| Failure(format!("missing {what}")))
}

fn cmd_gen(g: Gen, run: &mut Run) -> Res<u8> {
    let (inst, out): (Instance, Out) = match g {
        Gen::FromDimacs { path, out } => (from_dimacs(&run.read(&path)?)?.into(), out),
        Gen::Random {
            n,
            k,
            m,
            seed,
            planted,
            epsilon,
            out,
        } => {
            run.seed = Some(seed);
            let mut inst = if planted {
                planted_product_instance(n, k, m, seed)?
            } else {
                random_projector_instance(n, k, m, seed)?
            };
            inst.epsilon = epsilon;
            (inst.into(), out)
        }
        Gen::Stoquastic {
            n,
            terms,
            seed,
            dyadic,
            lambda_yes,
            lambda_no,
            out,
        } => {
            run.seed = Some(seed);
            let grid = dyadic.map_or(GridSpec::Continuous, GridSpec::Dyadic);
            let mut inst = random_stoquastic_hamiltonian(n, terms, seed, grid)?;
            inst.lambda_yes = lambda_yes;
            inst.lambda_no = lambda_no;
            (inst.into(), out)
        }
        Gen::CnfEnsemble {
            path,
            q_bits,
            lambda_yes,
            lambda_no,
            out,
        } => {
            let cnf = Cnf::parse(&run.read(&path)?)?;
            let mut ens = cnf_ensemble(&cnf, q_bits)?;
            ens.lambda_yes = lambda_yes;
            ens.lambda_no = lambda_no;
            (ens.into(), out)
        }
    };
    inst.validate().into_result()?;
    warn(&inst);
    run.emit(&out, &inst.to_json())?;
    Ok(0)
}

fn cmd_compile(a: CompileArgs, run: &mut Run) -> Res<u8> {
    let path = pick(&[&a.input, &a.circuit, &a.instance], "input file")?.clone();
    let text = match a.to {
        Target::Clock | Target::SixSat => {
            let c = run.circuit(&path)?;
            let x = BitString::parse(&a.x, Some(c.n))?;
            let clock = ClockInstance::compile(&c, x)?;
            let inst: Instance = match a.to {
                Target::Clock => match a.delta {
                    Some(d) => clock.perturbed_hamiltonian(d)?.into(),
                    None => clock.hamiltonian().into(),
                },
                _ => clock.export_6sat(a.epsilon, dense_limit()?)?.into(),
            };
            warn(&inst);
            inst.to_json()
        }
        Target::Verifier => {
            let h = want_lh_min(run.instance(&path)?)?;
            let v = hamiltonian_to_verifier_with(&h, a.max_bits)?;
            if v.mixing_error > 0.0 {
                eprintln!(
                    "warning: weights rounded to {} selector bits (mixing error {:e})",
                    v.selector_bits, v.mixing_error
                );
            }
            v.circuit.to_json()
        }
    };
    run.emit(&a.out, &text)?;
    Ok(0)
}

fn cmd_spectrum(a: SpectrumArgs, run: &mut Run) -> Res<u8> {
    let limit = dense_limit()?;
    let mut report = serde_json::Map::new();
    let mut thresholds = None;
    let (n, h, offset) = if let Some(path) = &a.circuit {
        let c = run.circuit(path)?;
        let x = BitString::parse(&a.x, Some(c.n))?;
        let lh = ClockInstance::compile(&c, x)?.hamiltonian();
        report.insert("kind".into(), json!("clock"));
        (lh.n, lh.hamiltonian()?, 0.0)
    } else {
        let path = pick(&[&a.input, &a.instance], "instance file")?;
        let inst = run.instance(path)?;
        warn(&inst);
        report.insert("kind".into(), json!(inst.kind()));
        match inst {
            Instance::LhMin(lh) => {
                thresholds = lh.thresholds().ok();
                (lh.n, lh.hamiltonian()?, 0.0)
            }
            // H = sum (I - P) = M - sum P
            Instance::StoqSat(s) => (s.n, s.projector_sum()?.scaled(-1.0), s.m() as f64),
            Instance::Ensemble(_) => {
                return Err(Failure("use `ensemble` for disorder ensembles".into()))
            }
        }
    };
    report.insert("n".into(), json!(n));
    if n <= limit {
        let e: Vec<f64> = eigenvalues(&h.to_dense(limit)?)
            .into_iter()
            .map(|v| v + offset)
            .collect();
        let min = e[0];
        report.insert("method".into(), json!("dense"));
        report.insert("min".into(), json!(min));
        report.insert("max".into(), json!(e[e.len() - 1]));
        report.insert("gap".into(), json!(gap_of(&e)));
        report.insert(
            "ground_dim".into(),
            json!(e.iter().filter(|&&v| v < min + DEGENERACY).count()),
        );
    } else {
        let opts = PowerOptions::default();
        let min = extreme_eigenvalue(&h, Which::Min, &opts)?.value + offset;
        let max = extreme_eigenvalue(&h, Which::Max, &opts)?.value + offset;
        report.insert("method".into(), json!("power-iteration"));
        report.insert("min".into(), json!(min));
        report.insert("max".into(), json!(max));
        report.insert("gap".into(), Value::Null);
        report.insert("ground_dim".into(), Value::Null);
    }
    let mut code = 0;
    if let Some((y, no)) = thresholds {
        let min = report["min"].as_f64().expect("min");
        let verdict = if min <= y {
            "yes"
        } else if min >= no {
            "no"
        } else {
            code = 2;
            "promise-violated"
        };
        report.insert("lambda_yes".into(), json!(y));
        report.insert("lambda_no".into(), json!(no));
        report.insert("verdict".into(), json!(verdict));
    }
    run.emit(
        &a.out,
        &(serde_json::to_string_pretty(&Value::Object(report)).expect("json") + "\n"),
    )?;
    Ok(code)
}

fn cmd_prove(a: ProveArgs, run: &mut Run) -> Res<u8> {
    let inst = run.instance(&a.instance)?;
    warn(&inst);
    let inst = want_stoq_sat(inst)?;
    let w = honest_witness(&inst, dense_limit()?)?;
    if w.flagged {
        eprintln!(
            "top eigenvalue of G is {} < 1: not a yes-instance",
            w.top_eigenvalue
        );
    }
    run.emit(
        &a.out,
        &(serde_json::to_string_pretty(&w).expect("json") + "\n"),
    )?;
    Ok(if w.flagged { 2 } else { 0 })
}

fn parse_witnesses(spec: &str, n: usize) -> Res<Vec<BitString>> {
    if spec == "all" {
        return Ok(adversarial_witnesses(n, AdversaryMode::AllBasis)?);
    }
    let path = Path::new(spec);
    if path.is_file() {
        let v: Value = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Failure(format!("{spec}: {e}")))?;
        let s = v
            .pointer("/vector/argmax")
            .and_then(Value::as_str)
            .ok_or_else(|| Failure(format!("{spec}: no vector.argmax field")))?;
        return Ok(vec![BitString::parse(s, Some(n))?]);
    }
    Ok(vec![BitString::parse(spec, Some(n))?])
}

fn cmd_verify(a: VerifyArgs, run: &mut Run) -> Res<u8> {
    run.seed = Some(a.seed);
    let inst = run.instance(&a.instance)?;
    warn(&inst);
    let inst = want_stoq_sat(inst)?;
    let witnesses = parse_witnesses(&a.witness, inst.n)?;
    if Path::new(&a.witness).is_file() {
        run.read(Path::new(&a.witness))?;
    }
    let steps = match a.steps {
        Some(s) => s,
        None => required_steps(inst.n, inst.require_epsilon()?, inst.m())?,
    };
    let config = WalkConfig::new(steps, a.seed).with_delta(a.delta);
    let walker = Walker::new(&inst)?;
    let exec = a.jobs.exec();
    let mut csv = String::from("witness,steps,seed,trials,accepted,rate,wilson_low,wilson_high\n");
    let mut jsonl = String::new();
    for w in witnesses {
        let ts = exec.install(a.jobs.jobs, || walker.trials(w, a.trials, &config, exec))?;
        let accepted = ts.iter().filter(|t| t.outcome.accepted()).count() as u64;
        let r = stoq_core::walk::RateReport::new(accepted, a.trials);
        csv.push_str(&format!(
            "{},{steps},{},{},{},{},{},{}\n",
            w.to_binary(),
            a.seed,
            a.trials,
            accepted,
            float(r.rate),
            float(r.wilson_low),
            float(r.wilson_high)
        ));
        if a.transcripts.is_some() {
            jsonl.push_str(&transcripts_to_jsonl(&ts));
        }
    }
    if let Some(p) = &a.transcripts {
        fs::write(p, jsonl)?;
    }
    run.emit(&a.out, &csv)?;
    Ok(0)
}

fn cmd_trace(a: TraceArgs, run: &mut Run) -> Res<u8> {
    run.seed = a.seed;
    let inst = run.instance(&a.instance)?;
    warn(&inst);
    let h = want_lh_min(inst)?;
    let (g, p) = sbp_matrix(&h)?;
    let thresholds = match (a.lambda_yes, a.lambda_no) {
        (Some(y), Some(n)) => Some((y, n)),
        _ => h.thresholds().ok(),
    };
    let bounds = thresholds
        .map(|(y, n)| sbp_bounds(y, n, p, h.n, 0.5))
        .transpose()?;
    let l = match (a.steps, bounds) {
        (Some(l), _) => l,
        (None, Some(b)) => b.l,
        (None, None) => {
            return Err(Failure(
                "no --steps and no thresholds to derive L from".into(),
            ))
        }
    };
    let exec = a.jobs.exec();
    let report = match a.mode {
        TraceModeArg::Exact => trace_power_exact(&g, l, dense_limit()?)?,
        TraceModeArg::Sampled => {
            let seed = a
                .seed
                .ok_or_else(|| Failure("sampled mode needs --seed".into()))?;
            exec.install(a.jobs.jobs, || {
                trace_power_sampled(&g, l, a.paths, seed, exec)
            })?
        }
    };
    let report = match bounds {
        Some(b) => report.with_thresholds(b.mu_yes, b.mu_no, h.n),
        None => report,
    };
    let mut code = 0;
    if let (Some(by), Some(bn)) = (report.bound_yes, report.bound_no) {
        if report.value < by && report.value > bn {
            eprintln!(
                "tr(G^L) = {} lies between the no bound {bn} and the yes bound {by}",
                report.value
            );
            code = 2;
        }
    }
    let name = a
        .instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    run.emit(&a.out, &trace_csv(&[(name, report)]))?;
    Ok(code)
}

fn cmd_ensemble(a: EnsembleArgs, run: &mut Run) -> Res<u8> {
    run.seed = Some(a.seed);
    let inst = run.instance(&a.instance)?;
    warn(&inst);
    let ens = match inst {
        Instance::Ensemble(e) => e,
        other => {
            return Err(Failure(format!(
                "expected an ensemble instance, got {}",
                other.kind()
            )))
        }
    };
    let exec = a.jobs.exec();
    let solver = ClusteredSolver::new(dense_limit()?);
    if a.decide {
        let (y, n) = match (a.lambda_yes, a.lambda_no, ens.lambda_yes, ens.lambda_no) {
            (Some(y), Some(n), _, _) | (None, None, Some(y), Some(n)) => (y, n),
            _ => return Err(Failure("--decide needs thresholds".into())),
        };
        let r = exec.install(a.jobs.jobs, || {
            av_decide(
                &ens,
                y,
                n,
                a.samples,
                a.seed,
                &AvConfig::default(),
                &solver,
                exec,
            )
        })?;
        let decision = match r.decision {
            Decision::Yes => "yes",
            Decision::No => "no",
            Decision::Inconclusive => "inconclusive",
        };
        eprintln!(
            "N = {} replicas (pilot sigma {}), thresholds {} / {}, fractions {} / {}: {decision}",
            r.replicas,
            r.pilot_std,
            r.lambda_yes_shifted,
            r.lambda_no_shifted,
            r.fraction_yes,
            r.fraction_no
        );
        run.emit(&a.out, &ensemble_csv(&r.stats, Some(decision), a.timing))?;
        return Ok(if r.decision == Decision::Inconclusive {
            2
        } else {
            0
        });
    }
    let rep = replica_ensemble(&ens, a.replicas)?;
    let stats = exec.install(a.jobs.jobs, || {
        lambda_stats(&rep, a.samples, a.seed, &solver, exec)
    })?;
    run.emit(&a.out, &ensemble_csv(&stats, None, a.timing))?;
    Ok(0)
}

fn dispatch(cli: Cli) -> Res<u8> {
    let mut run = Run::new();
    match cli.command {
        Command::Gen(g) => cmd_gen(g, &mut run),
        Command::Compile(a) => cmd_compile(a, &mut run),
        Command::Spectrum(a) => cmd_spectrum(a, &mut run),
        Command::Prove(a) => cmd_prove(a, &mut run),
        Command::Verify(a) => cmd_verify(a, &mut run),
        Command::Trace(a) => cmd_trace(a, &mut run),
        Command::Ensemble(a) => cmd_ensemble(a, &mut run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
