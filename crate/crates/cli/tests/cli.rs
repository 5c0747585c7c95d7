use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stoq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stoq"))
        .args(args)
        .current_dir(dir)
        .env_remove("STOQ_DENSE_LIMIT")
        .output()
        .expect("spawn stoq")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stoq(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const XX: &str = r#"{"version":1,"n":0,"n_w":0,"n_0":0,"n_plus":1,"out_basis":"plus",
"gates":[{"kind":"X","qubits":[0]},{"kind":"X","qubits":[0]}]}"#;

const SAT: &str = "p cnf 3 3\n1 2 0\n-1 3 0\n2 -3 0\n";
const UNSAT: &str = "p cnf 2 4\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 0\n";

#[test]
fn verify_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("f.cnf"), SAT).unwrap();
    ok(
        d.path(),
        &["gen", "from-dimacs", "f.cnf", "--out", "sat.json"],
    );
    let args = [
        "verify",
        "--instance",
        "sat.json",
        "--witness",
        "0b101",
        "--trials",
        "1000",
        "--seed",
        "7",
    ];
    let a = ok(d.path(), &args);
    let b = ok(d.path(), &args);
    assert_eq!(a, b);
    let seq = ok(d.path(), &[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a, seq);
    assert!(a.starts_with("witness,steps,seed,trials,accepted,rate"));
}

#[test]
fn accepting_circuit_pipeline() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("xx.json"), XX).unwrap();
    ok(
        d.path(),
        &["compile", "xx.json", "--to", "6sat", "--out", "sat.json"],
    );
    ok(
        d.path(),
        &["prove", "--instance", "sat.json", "--out", "w.json"],
    );
    let csv = ok(
        d.path(),
        &[
            "verify",
            "--instance",
            "sat.json",
            "--witness",
            "w.json",
            "--trials",
            "500",
            "--seed",
            "3",
        ],
    );
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "500");
    assert_eq!(row[5].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn clock_spectrum() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("xx.json"), XX).unwrap();
    ok(
        d.path(),
        &["compile", "xx.json", "--to", "clock", "--out", "clock.json"],
    );
    let r: Value = serde_json::from_str(&ok(d.path(), &["spectrum", "clock.json"])).unwrap();
    assert!(r["min"].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(r["ground_dim"], 1);
    let direct: Value =
        serde_json::from_str(&ok(d.path(), &["spectrum", "--circuit", "xx.json"])).unwrap();
    assert_eq!(direct["min"], r["min"]);
    let out = Command::new(env!("CARGO_BIN_EXE_stoq"))
        .args(["spectrum", "clock.json"])
        .current_dir(d.path())
        .env("STOQ_DENSE_LIMIT", "2")
        .output()
        .unwrap();
    let p: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(p["method"], "power-iteration");
    assert!(p["min"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        stoq(d.path(), &["verify", "--instance"]).status.code(),
        Some(1)
    );
    assert_eq!(
        stoq(d.path(), &["prove", "--instance", "missing.json"])
            .status
            .code(),
        Some(1)
    );
    fs::write(d.path().join("bad.json"), "{\"version\": 9}").unwrap();
    let out = stoq(d.path(), &["prove", "--instance", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
    fs::write(d.path().join("u.cnf"), UNSAT).unwrap();
    ok(
        d.path(),
        &["gen", "from-dimacs", "u.cnf", "--out", "unsat.json"],
    );
    assert_eq!(
        stoq(d.path(), &["prove", "--instance", "unsat.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(stoq(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn manifest_sidecar() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("f.cnf"), SAT).unwrap();
    ok(
        d.path(),
        &["gen", "from-dimacs", "f.cnf", "--out", "sat.json"],
    );
    let m: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("sat.json.manifest.json")).unwrap())
            .unwrap();
    // sha256 of the DIMACS text
    assert_eq!(
        m["inputs"][0]["sha256"],
        "c5d7b5eab82875d86b21b2b6b05d87cead6c991d85dcb9835b0e18ee82480fbd"
    );
}

#[test]
fn ensemble_and_decision() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("e.cnf"),
        "p cnf 4 3\n1 3 0\n-1 4 0\n2 -3 -4 0\n",
    )
    .unwrap();
    ok(
        d.path(),
        &[
            "gen",
            "cnf-ensemble",
            "e.cnf",
            "--q-bits",
            "2",
            "--out",
            "ens.json",
        ],
    );
    let args = [
        "ensemble",
        "--instance",
        "ens.json",
        "--samples",
        "50",
        "--seed",
        "4",
        "--replicas",
        "4",
    ];
    let a = ok(d.path(), &args);
    assert_eq!(a, ok(d.path(), &args));
    assert!(a.starts_with("sample_index,r,lambda,runtime_ms"));
    assert_eq!(a.lines().count(), 52);
    let dec = ok(
        d.path(),
        &[
            "ensemble",
            "--instance",
            "ens.json",
            "--samples",
            "100",
            "--seed",
            "1",
            "--decide",
            "--lambda-yes",
            "0",
            "--lambda-no",
            "0.6667",
        ],
    );
    assert!(dec.trim_end().ends_with(",yes"));
}

#[test]
fn trace_report() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "gen",
            "stoquastic",
            "--n",
            "4",
            "--terms",
            "5",
            "--seed",
            "2",
            "--out",
            "h.json",
        ],
    );
    let exact = ok(d.path(), &["trace", "--instance", "h.json", "--steps", "3"]);
    let sampled = ok(
        d.path(),
        &[
            "trace",
            "--instance",
            "h.json",
            "--steps",
            "3",
            "--mode",
            "sampled",
            "--paths",
            "20000",
            "--seed",
            "5",
        ],
    );
    let field = |csv: &str, i: usize| -> f64 {
        csv.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(i)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field(&exact, 3) - field(&sampled, 3)).abs() <= 3.0 * field(&sampled, 4));
    assert_eq!(
        stoq(
            d.path(),
            &[
                "trace",
                "--instance",
                "h.json",
                "--steps",
                "3",
                "--mode",
                "sampled"
            ]
        )
        .status
        .code(),
        Some(1)
    );
}
