use std::path::Path;
use std::process::Command;

use kdvduo::harness::{run, sweep, Axis, Experiment, ExperimentConfig, Outcome, StateSpec};
use kdvduo::{Error, Grid};

fn small(experiment: Experiment) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        grid: Grid { length: 1.0, horizon: 1.0, nx: 41, nt: 200 },
        init: StateSpec::Random { amplitude: 0.1, modes: 4 },
        target: StateSpec::Random { amplitude: 0.05, modes: 3 },
        seed: 7,
        ..ExperimentConfig::default()
    }
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for exp in [Experiment::Simulate, Experiment::Control, Experiment::Adjoint] {
        let mut cfg = small(exp);
        cfg.nonlinear = exp == Experiment::Simulate;
        cfg.params = cfg.params.with_nonlinear(1.0, 1.0);
        let (a, b) = (tmp.path().join(format!("{}-a", exp.name())), tmp.path().join(format!("{}-b", exp.name())));
        run(&cfg, &a).unwrap();
        run(&cfg, &b).unwrap();
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{}", exp.name());
    }
}

#[test]
fn seed_changes_random_states() {
    let cfg = small(Experiment::Simulate);
    let other = ExperimentConfig { seed: 8, ..cfg.clone() };
    assert_ne!(cfg.states(), other.states());
    assert_eq!(cfg.states(), cfg.clone().states());
}

#[test]
fn atlas_lists_the_smallest_length() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { p_points: 20, ..small(Experiment::CriticalAtlas) };
    let (outcome, metrics) = run(&cfg, tmp.path()).unwrap();
    assert_eq!(outcome, Outcome::Success);
    assert!((metrics["smallest_length"].as_f64().unwrap() - 3.5124).abs() < 1e-4);
    let mut rd = csv::Reader::from_path(tmp.path().join("atlas.csv")).unwrap();
    let first = rd.records().next().unwrap().unwrap();
    assert!((first[0].parse::<f64>().unwrap() - 3.5124).abs() < 1e-4);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["experiment"], "critical-atlas");
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f == "atlas.csv"));
}

#[test]
fn verify_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let (outcome, metrics) = run(&small(Experiment::VerifySuite), tmp.path()).unwrap();
    assert_eq!(outcome, Outcome::Success, "{metrics:?}");
    assert_eq!(metrics["failed_checks"], 0);
}

#[test]
fn stalled_control_records_the_margin() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Control);
    cfg.config = kdvduo::hum::ControlConfig::OneControl;
    cfg.grid = Grid { length: 10.0, horizon: 1.0, nx: 61, nt: 200 };
    cfg.tolerances.hum_maxit = 5;
    cfg.tolerances.hum_tol = 1e-8;
    let (outcome, metrics) = run(&cfg, tmp.path()).unwrap();
    assert_eq!(outcome, Outcome::NotConverged);
    assert_eq!(outcome.exit_code(), 2);
    assert!(metrics.contains_key("observability_margin"));
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn config_parsing() {
    let cfg = ExperimentConfig::from_json(
        r#"{"experiment":"witness-scan","params":{"a":0.3,"b":1,"c":2,"r":1},"grid":{"L":2,"T":1,"nx":51,"nt":100},
            "config":"OneControl","init":{"kind":"sine","amplitude":0.1,"mode":2}}"#,
    )
    .unwrap();
    assert_eq!(cfg.experiment, Experiment::WitnessScan);
    assert_eq!(cfg.grid.length, 2.0);
    assert_eq!(cfg.init, StateSpec::Sine { amplitude: 0.1, mode: 2, u: true, v: false });
    assert!(matches!(ExperimentConfig::from_json(r#"{"bogus":1}"#), Err(Error::Config(_))));
    assert!(matches!(ExperimentConfig::from_json(r#"{"experiment":"fly"}"#), Err(Error::Config(_))));
}

#[test]
fn bad_inputs_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Simulate);
    cfg.params.a = 2.0;
    assert!(matches!(run(&cfg, tmp.path()), Err(Error::InvalidParams(_))));
    let mut cfg = small(Experiment::Simulate);
    cfg.boundary.insert("h9".into(), kdvduo::harness::Wave { amplitude: 1.0, frequency: 1.0, phase: 0.0 });
    assert!(matches!(run(&cfg, tmp.path()), Err(Error::Config(_))));
    let cfg = small(Experiment::Control);
    for values in [vec![], vec![1.0, -1.0], vec![2.0, 1.0]] {
        assert!(matches!(sweep(&cfg, Axis::L, &values, tmp.path()), Err(Error::Config(_))));
    }
    assert!("width".parse::<Axis>().is_err());
}

#[test]
fn sweep_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { p_points: 10, margin_modes: 3, ..small(Experiment::Control) };
    let (_, rows) = sweep(&cfg, Axis::Amplitude, &[0.5, 1.0, 2.0], tmp.path()).unwrap();
    assert_eq!(rows.len(), 3);
    for (k, r) in rows.iter().enumerate() {
        assert!(tmp.path().join(format!("point_{k:03}/manifest.json")).exists());
        assert_eq!(r.margin, rows[0].margin);
    }
    let text = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_kdvduo");
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"grid":{"L":1,"T":1,"nx":41,"nt":100}}"#).unwrap();
    let out = tmp.path().join("sim");
    let st = Command::new(bin).args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(0));
    assert!(out.join("trajectory.csv").exists());

    std::fs::write(&cfg, r#"{"params":{"a":3,"b":1,"c":1,"r":1}}"#).unwrap();
    let st = Command::new(bin).args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(1));

    std::fs::write(&cfg, r#"{"grid":{"L":10,"T":1,"nx":61,"nt":200},"config":"OneControl","tolerances":{"hum_maxit":3,"hum_tol":1e-8}}"#)
        .unwrap();
    let st = Command::new(bin).args(["control", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(2));

    let st = Command::new(bin)
        .env("KDVDUO_THREADS", "2")
        .args(["sweep", "--axis", "T", "--values", "2,1"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(1));
}
