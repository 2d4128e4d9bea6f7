use std::fs;
use std::process::Command;

use rough_pdo_cli::{run, ExperimentConfig, EXPERIMENTS};

fn roughpdo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_roughpdo"))
}

fn write_config(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
    let p = dir.path().join("exp.toml");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn list_names_every_experiment() {
    let out = roughpdo().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in EXPERIMENTS {
        assert!(text.lines().any(|l| l == name), "{name} missing");
    }
}

#[test]
fn unknown_experiment_is_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(&dir, "experiment = \"no-such-thing\"\nseed = 1\n");
    let out = roughpdo().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "unknown-experiment");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(&dir, "experiment = \"adjoint-identity\"\nseed = 1\nbogus = 3\n");
    let out = roughpdo().arg("validate").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "config");
}

#[test]
fn validate_reports_guard_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(&dir, "experiment = \"counterexample-growth\"\nseed = 1\nn = 1024\nj_max = [9]\n");
    let out = roughpdo().arg("validate").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains("guard"));
}

#[test]
fn run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(&dir, "experiment = \"adjoint-identity\"\nseed = 5\nn = 32\ncount = 3\n");
    let out_dir = dir.path().join("out");
    let out = roughpdo().args(["--threads", "2", "run"]).arg(&p).arg("--out-dir").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("adjoint-identity.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 5);
    assert_eq!(json["schema_version"], 1);
    for a in json["artifacts"].as_array().unwrap() {
        assert!(std::path::Path::new(a.as_str().unwrap()).exists());
    }
}

#[test]
fn seed_override_changes_report_seed() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(&dir, "experiment = \"adjoint-identity\"\nseed = 5\nn = 32\ncount = 2\n");
    let out = roughpdo().args(["--seed", "99", "run"]).arg(&p).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 99);
}

#[test]
fn reports_are_deterministic() {
    let mut cfg = ExperimentConfig::new("theorem1-bound-sweep", 11);
    cfg.n = Some(64);
    cfg.count = Some(4);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.deterministic_json(), b.deterministic_json());
}

#[test]
fn config_roundtrips_through_toml() {
    let mut cfg = ExperimentConfig::new("cap-kernel-certificates", 3);
    cfg.l = Some(vec![1, 2]);
    cfg.k0 = Some(3);
    assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg = ExperimentConfig::load(&p).unwrap();
        assert!(EXPERIMENTS.contains(&cfg.experiment.as_str()), "{}", p.display());
    }
}
