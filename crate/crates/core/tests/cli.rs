use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phototherm")).args(args).output().unwrap()
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn list_prints_every_experiment() {
    let o = bin(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let ids: Vec<&str> = text.lines().collect();
    assert_eq!(ids, phototherm::experiments::EXPERIMENT_IDS);
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", r#"{"experiment":"nope","params":{}}"#);
    let out = tmp.path().join("out");
    let o = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    assert!(!out.exists());
}

#[test]
fn bad_field_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", r#"{"experiment":"gain-table","params":{"detectors":"many"}}"#);
    let out = tmp.path().join("out");
    let o = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("detectors"));
    assert!(!out.exists());
}

#[test]
fn missing_config_file_fails() {
    let o = bin(&["run", "--config", "/definitely/not/here.json", "--out", "/tmp/x"]);
    assert!(!o.status.success());
}

#[test]
fn run_writes_manifest_and_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("walk_fan.json");
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(bin(&["run", "--config", cfg, "--out", a.to_str().unwrap()]).status.success());
    let o = bin(&["run", "--config", cfg, "--out", b.to_str().unwrap(), "--seed", "7", "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |d: &Path| -> serde_json::Value { serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap() };
    let (ma, mb) = (read(&a), read(&b));
    assert_eq!(ma["seed"], 1);
    assert_eq!(mb["seed"], 7);
    assert_ne!(ma["files"], mb["files"]);
    for f in ma["files"].as_array().unwrap() {
        assert!(a.join(f["path"].as_str().unwrap()).is_file());
    }
}

#[test]
fn jobs_zero_is_rejected() {
    let cfg = configs_dir().join("c03_gain_table.json");
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap(), "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_two_method_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(configs_dir().join("c08_pipeline_gaussian.json")).unwrap()).unwrap();
    v["params"]["regularizers"]
        .as_array_mut()
        .unwrap()
        .push(serde_json::json!({ "method": "admm", "admm": { "lambda": { "fraction-of-max": 0.01 } } }));
    let cfg = write(tmp.path(), "both.json", &v.to_string());
    let out = tmp.path().join("run");
    assert!(bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let o = bin(&["compare", "--a", out.join("tsvd").to_str().unwrap(), "--b", out.join("admm").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["a_method"], "tsvd");
    assert_eq!(report["sources"].as_array().unwrap().len(), 3);
    let o = bin(&["compare", "--a", out.join("tsvd").to_str().unwrap(), "--b", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
}
