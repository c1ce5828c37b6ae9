mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use serde_json::Value;
use spinbus::trace::read_trace_csv;
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/paper4.json")
}

fn spinbus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinbus"))
        .args(args)
        .env_remove("SPINBUS_ORACLE_CAP")
        .output()
        .unwrap()
}

fn summary(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn transfer_reaches_the_end() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("trace.csv");
    let out = spinbus(&["transfer", "--spec", s(&fixture()), "--source", "1", "--n", "100", "--out", s(&csv)]);
    let summary = summary(&out);
    assert!(summary["final_p"].as_f64().unwrap() >= 0.99);
    assert_eq!(summary["n_iter"], 100);

    let (n_spins, rows) = read_trace_csv(fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(n_spins, 4);
    assert_eq!(rows.len(), 100);
    let record = spinbus::run_transfer(&fixture_spec(), 1, 100).unwrap();
    assert_eq!(rows, record.trace_rows());
}

#[test]
fn output_is_deterministic() {
    let a = spinbus(&["transfer", "--spec", s(&fixture()), "--source", "2", "--n", "30"]);
    let b = spinbus(&["transfer", "--spec", s(&fixture()), "--source", "2", "--n", "30"]);
    let strip = |o: &Output| {
        let mut v = summary(o);
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn entangle_with_coherence_column() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("ent.csv");
    let out = spinbus(&[
        "entangle", "--spec", s(&fixture()), "--pair", "1,4", "--n", "8", "--compute-cn", "--out", s(&csv),
    ]);
    let summary = summary(&out);
    assert!(summary["final_coherence"].as_f64().is_some());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",C_n"));
    let (_, rows) = read_trace_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), (1..=8).collect::<Vec<_>>());
    assert!(rows.iter().all(|r| r.coherence.is_some()));
}

#[test]
fn inverse_delivers_to_target() {
    let out = spinbus(&["inverse", "--spec", s(&fixture()), "--target", "1", "--n", "100", "--phase-correction"]);
    let summary = summary(&out);
    assert!(summary["delivery_fidelity"].as_f64().unwrap() >= 0.99);
    let vac = &summary["delivered_qubit"]["vacuum"];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((vac[0].as_f64().unwrap() - h).abs() <= 1e-9);
    assert!(vac[1].as_f64().unwrap().abs() <= 1e-9);
}

#[test]
fn scan_tau_reports_grid_order() {
    let out = spinbus(&[
        "scan-tau", "--spec", s(&fixture()), "--source", "1", "--n", "5", "--taus-ms", "1.5,2.1,2.7",
    ]);
    let summary = summary(&out);
    let table = summary["table"].as_array().unwrap();
    let taus: Vec<f64> = table.iter().map(|r| r["tau_ms"].as_f64().unwrap()).collect();
    assert_eq!(taus.len(), 3);
    assert!((taus[1] - 2.1).abs() <= 1e-12);
    let direct = spinbus::run_transfer(&fixture_spec(), 1, 5).unwrap().final_p();
    assert!((table[1]["p_n"].as_f64().unwrap() - direct).abs() <= 1e-12);
}

#[test]
fn fit_scale_recovers_factor() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data.csv");
    let record = spinbus::run_transfer(&fixture_spec(), 1, 40).unwrap();
    let mut text = String::from("n,value\n");
    for pt in record.trace.iter().step_by(3) {
        text += &format!("{},{}\n", pt.n, 0.7 * pt.p);
    }
    fs::write(&data, text).unwrap();
    let out = spinbus(&["fit-scale", "--spec", s(&fixture()), "--source", "1", "--data", s(&data)]);
    assert!((summary(&out)["scale"].as_f64().unwrap() - 0.7).abs() <= 1e-12);
}

#[test]
fn crosscheck_fixture_system() {
    let out = spinbus(&["crosscheck", "--spec", s(&fixture()), "--source", "1", "--n", "20"]);
    assert!(summary(&out)["crosscheck"]["max_deviation"].as_f64().unwrap() <= 1e-10);
    let out = spinbus(&["transfer", "--spec", s(&fixture()), "--source", "1", "--n", "20", "--oracle-crosscheck"]);
    assert!(summary(&out)["crosscheck"]["max_deviation"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn crosscheck_two_spins() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("two.json");
    fs::write(&spec, r#"{"n_spins": 2, "tau_ms": 1.0, "couplings_hz": {"1,2": -800.0}}"#).unwrap();
    let out = spinbus(&["crosscheck", "--spec", s(&spec), "--source", "1", "--n", "10"]);
    assert!(summary(&out)["crosscheck"]["max_deviation"].as_f64().unwrap() <= 1e-15);
}

#[test]
fn oversized_chain_is_refused() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("big.json");
    let mut rng = rng(41);
    let spec = random_spec(&mut rng, 15);
    fs::write(&path, spec.to_config_json()).unwrap();
    let out = spinbus(&["crosscheck", "--spec", s(&path), "--source", "1", "--n", "2"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusing"));

    let capped = Command::new(env!("CARGO_BIN_EXE_spinbus"))
        .args(["crosscheck", "--spec", s(&fixture()), "--source", "1", "--n", "2"])
        .env("SPINBUS_ORACLE_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(4));

    // The subspace engine itself has no cap.
    let out = spinbus(&["transfer", "--spec", s(&path), "--source", "1", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_configs_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("bad_pair.json", r#"{"n_spins": 4, "tau_ms": 2.1, "couplings_hz": {"5,2": 1.0}}"#, "couplings_hz.5,2"),
        ("no_tau.json", r#"{"n_spins": 3, "couplings_hz": {"1,2": 1.0}}"#, "tau_ms"),
        ("syntax.json", "{ not json", ""),
    ];
    for (name, body, key) in cases {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        let out = spinbus(&["transfer", "--spec", s(&path), "--source", "1"]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(key), "{name}");
    }
    let out = spinbus(&["transfer", "--spec", s(&dir.path().join("missing.json")), "--source", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spinbus(&["transfer", "--spec", s(&fixture()), "--source", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spinbus(&["entangle", "--spec", s(&fixture()), "--pair", "1-4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn record_json_export_round_trips() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("record.json");
    let out = spinbus(&["entangle", "--spec", s(&fixture()), "--pair", "1,4", "--n", "12", "--json", s(&json)]);
    summary(&out);
    let record = spinbus::TransferRecord::from_json(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(record, spinbus::run_entangle(&fixture_spec(), 1, 4, 12).unwrap());
}
