use std::path::Path;
use std::process::{Command, Output};

use srlab::{load_report, ExperimentConfig};

fn srlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srlab")).args(args).output().expect("spawn srlab")
}

fn write_cfg(dir: &Path, cfg: &ExperimentConfig) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("heisenberg", vec![0.0; 3], vec![0.6, 0.0, 0.0], vec![0.5, 0.3, 0.2]);
    cfg.samples_per_eps = 300;
    cfg.steps = 32;
    cfg
}

#[test]
fn distance_reports_oracle() {
    let out = srlab(&["distance", "--model", "heisenberg", "--from", "0,0,0", "--to", "1,0,0", "--restarts", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert_eq!(v["oracle_distance"].as_f64(), Some(1.0));
}

#[test]
fn experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let od = out_dir.to_str().unwrap();

    let mut cfg = small();
    cfg.tube.radius = 1e9;
    let c = write_cfg(dir.path(), &cfg);
    assert_eq!(srlab(&["tube", "--config", &c, "--out", od, "--seed", "4"]).status.code(), Some(0));
    let report = load_report(&out_dir).unwrap();
    assert_eq!(report.seed, 4);
    for f in ["report.json", "curves.csv", "plot.svg", "timing.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }

    // An impossible tolerance turns the Léandre verdict into a failure.
    let mut cfg = small();
    cfg.tolerances.leandre = 0.0;
    let c = write_cfg(dir.path(), &cfg);
    assert_eq!(srlab(&["leandre", "--config", &c, "--out", od]).status.code(), Some(2));

    let mut cfg = small();
    cfg.model = serde_json::from_value(serde_json::json!({
        "name": "custom",
        "params": {"fields": "V1=(1,0,-x1/2);V2=(0,1,x0/2)", "drift": "(1,0,0)"}
    }))
    .unwrap();
    cfg.drift_on = true;
    let c = write_cfg(dir.path(), &cfg);
    assert_eq!(srlab(&["reversal", "--config", &c, "--out", od]).status.code(), Some(3));
}

#[test]
fn errors_exit_one() {
    let out = srlab(&["leandre", "--config", "/nonexistent/cfg.json", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = srlab(&["distance", "--model", "heisenberg", "--from", "0,0", "--to", "1,0,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_then_holder() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let ps = p.to_str().unwrap();
    let sim = ["simulate", "--model", "torus_hypo", "--from", "0.5,-1", "--eps", "0.2", "--seed", "3", "--out", ps];
    assert!(srlab(&sim).status.success());
    let first = std::fs::read(&p).unwrap();
    assert!(srlab(&sim).status.success());
    assert_eq!(std::fs::read(&p).unwrap(), first);

    let out = srlab(&["holder", "--input", ps, "--periodic", "0,1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["holder"]["full_norm"].as_f64().unwrap() > 0.0);
    assert!(v["rough"]["homogeneous"].as_f64().unwrap() >= v["rough"]["path_level"].as_f64().unwrap());
}

#[test]
fn bridge_and_geodesic_write_directories() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b");
    let out = srlab(&[
        "bridge",
        "--model",
        "heisenberg",
        "--from",
        "0,0,0",
        "--to",
        "0.5,0,0",
        "--eps",
        "0.5",
        "--target-count",
        "12",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ens = srlab::io::load_ensemble(&b).unwrap();
    assert_eq!(ens.len(), 12);

    let g = dir.path().join("g");
    let out = srlab(&[
        "geodesic",
        "--model",
        "heisenberg",
        "--from",
        "0,0,0",
        "--to",
        "1,0,0",
        "--restarts",
        "2",
        "--out",
        g.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let h = srlab::io::load_control(&g.join("control.csv")).unwrap();
    let path = srlab::io::load_path(&g.join("path.csv")).unwrap();
    assert!((srlab::srlab_core::h1_norm_sq(&h) - 1.0).abs() < 0.02);
    assert!((path.point(path.grid())[0] - 1.0).abs() < 1e-3);
}
