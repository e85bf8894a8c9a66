use std::path::Path;

use fiberchan_cli::config::ExperimentConfig;
use fiberchan_cli::{run_experiment, Command};
use serde_json::Value;

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn run(cmd: Command, text: &str, seed: u64, out: &Path) {
    let cfg = ExperimentConfig::from_json(text).unwrap();
    run_experiment(cmd, &cfg, seed, out).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn long_fiber_carries_no_quantum_information() {
    let tmp = tempfile::tempdir().unwrap();
    run(Command::Fiber, r#"{"mode": "fiber"}"#, 0, tmp.path());
    let r = json(&tmp.path().join("fiber_report.json"));
    assert!(f(&r["gamma"]["abs"]) < 1e-6);
    assert!(f(&r["capacity"]["Q1"]) <= 1e-9);
    assert!((f(&r["coherence_length_um"]) - 213.0).abs() / 213.0 < 0.01);
    assert!((f(&r["decoherence_length_m"]) - 0.61).abs() / 0.61 < 0.01);
}

#[test]
fn short_fiber_keeps_some_capacity() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"mode": "fiber", "fiber": {"length": 0.3, "delta_n": 3.5e-4},
                   "grid": {"lambda_points": 21, "theta_points": 10, "phi_points": 20}}"#;
    run(Command::Fiber, text, 0, tmp.path());
    let r = json(&tmp.path().join("fiber_report.json"));
    let g = f(&r["gamma"]["abs"]);
    assert!(g > 0.1 && g < 1.0);
    let q1 = f(&r["capacity"]["Q1"]);
    assert!(q1 > 0.0);
    assert!((q1 - (1.0 - h2((1.0 - g) / 2.0))).abs() < 1e-6);
}

#[test]
fn decorrelated_fibers_halve_the_coherence() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"mode": "unidir",
                   "fiber": {"length": 120.0, "delta_n": 3.5e-4},
                   "fiber2": {"length": 60.0, "delta_n": 3.5e-4},
                   "grid": {"lambda_points": 51, "theta_points": 25, "phi_points": 50},
                   "bootstrap_sets": 4, "restarts": 4}"#;
    run(Command::Pipeline, text, 1, tmp.path());
    let r = json(&tmp.path().join("pipeline_report.json"));
    let oracle = 1.0 - h2(0.25);
    let q1 = f(&r["capacity"]["Q1"]);
    assert!((q1 - oracle).abs() < 0.02, "Q1 {q1} vs {oracle}");
    assert!(f(&r["fidelity_ideal"]["value"]) > 0.99);
}

#[test]
fn entangled_coherent_information_peaks_at_equal_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"mode": "chsh", "channel": {"kind": "dephasing", "gamma": 0.88},
                   "alpha_sq": [0.1, 0.3, 0.5, 0.7, 0.9], "shots": 100000, "bootstrap_sets": 10}"#;
    run(Command::Chsh, text, 0, tmp.path());
    let r = json(&tmp.path().join("chsh.json"));
    let points = r["points"].as_array().unwrap();
    let ic: Vec<f64> = points.iter().map(|p| f(&p["coherent_information"])).collect();
    let best = (0..ic.len()).max_by(|&a, &b| ic[a].total_cmp(&ic[b])).unwrap();
    assert_eq!(f(&points[best]["alpha_sq"]), 0.5);
    assert!((ic[2] - (1.0 - h2(0.06))).abs() < 1e-9);
    let s = f(&points[2]["s"]);
    assert!((s - 2.0 * (1.0 + 0.88f64 * 0.88).sqrt()).abs() < 1e-6);
    let table = std::fs::read_to_string(tmp.path().join("chsh_correlations_2.csv")).unwrap();
    assert!(table.starts_with("theta1,theta2,E\n"));
    assert_eq!(table.lines().count(), 1 + 12 * 12);
}

#[test]
fn tomography_reads_back_its_own_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let text = r#"{"mode": "tomo", "channel": {"kind": "dephasing", "gamma": 0.4, "axis": "X"}}"#;
    run(Command::Run, text, 2, &a);
    let counts = a.join("counts.csv");
    let b = tmp.path().join("b");
    let text = format!(r#"{{"mode": "tomo", "counts": {:?}}}"#, counts.to_string_lossy());
    run(Command::Run, &text, 2, &b);
    let ra = json(&a.join("reconstructed.json"));
    let rb = json(&b.join("reconstructed.json"));
    assert_eq!(ra["chi"], rb["chi"]);
    assert!(f(&json(&a.join("tomo_report.json"))["fidelity"]) > 0.99);
}

#[test]
fn capacity_mode_reports_the_dephasing_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"mode": "capacity", "channel": {"kind": "dephasing", "gamma": 0.5},
                   "grid": {"lambda_points": 21, "theta_points": 10, "phi_points": 20}}"#;
    run(Command::Run, text, 0, tmp.path());
    let r = json(&tmp.path().join("capacity.json"));
    assert!((f(&r["capacity"]["Q1"]) - f(&r["oracle"])).abs() < 1e-9);
    assert!((f(&r["oracle"]) - (1.0 - h2(0.25))).abs() < 1e-12);
}

#[test]
fn pipeline_outputs_repeat_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"mode": "bidir-ab", "fiber": {"length": 0.4, "delta_n": 3.5e-4},
                   "fiber2": {"length": 0.2, "delta_n": 3.5e-4}, "shots": 100000,
                   "grid": {"lambda_points": 11, "theta_points": 5, "phi_points": 10},
                   "bootstrap_sets": 3, "restarts": 2}"#;
    run(Command::Pipeline, text, 9, &tmp.path().join("a"));
    run(Command::Pipeline, text, 9, &tmp.path().join("b"));
    for name in ["manifest.json", "pipeline_report.json", "counts_port0.csv", "mean_channel.json"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
