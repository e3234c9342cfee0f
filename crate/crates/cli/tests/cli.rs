use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const NICHOLSON_P2: &str = r#"
[model]
kind = "nicholson"
p = 2.0
delay = 1.0

[wave]
c = 16.0
"#;

fn frontlab(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_frontlab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_accepts_nicholson_p2() {
    let dir = tempfile::tempdir().unwrap();
    let o = frontlab(dir.path(), NICHOLSON_P2, &["check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("out/hypothesis.json"));
    assert_eq!(report["H_ok"], Value::Bool(true), "{report}");
    let manifest = read_json(&dir.path().join("out/manifest_check.json"));
    assert_eq!(manifest["command"], "check");
    assert_eq!(manifest["config"]["model"]["p"], 2.0);
}

#[test]
fn check_rejects_long_delay_past_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("[model]\nkind = \"nicholson\"\np = {}\ndelay = 1.5\n", 3f64.exp());
    let o = frontlab(dir.path(), &cfg, &["check"]);
    assert_eq!(code(&o), 1);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "domain");
    assert!(dir.path().join("out/error.json").exists());
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_frontlab"))
        .args(["--config", "/nonexistent/run.toml", "--out"])
        .arg(dir.path())
        .arg("check")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = frontlab(dir.path(), &format!("{NICHOLSON_P2}\n[solver]\nrelax = 0.5\n"), &["check"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn front_without_backbone_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = frontlab(dir.path(), NICHOLSON_P2, &["front"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("backbone"));
}

#[test]
fn roots_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{NICHOLSON_P2}\n[roots]\nre_min = -2.0\n");
    let o = frontlab(dir.path(), &cfg, &["roots"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/roots.csv")).unwrap();
    assert!(csv.starts_with("re,im,abs_chi,abs_dchi\n"));
    let summary = read_json(&dir.path().join("out/roots.json"));
    let lambda = summary["lambda"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda < 1.0);
    assert_eq!(summary["count"].as_u64().unwrap() as usize, csv.lines().count() - 1);
}

#[test]
fn pipeline_is_byte_reproducible_and_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = frontlab(dir.path(), NICHOLSON_P2, &["backbone"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = frontlab(dir.path(), NICHOLSON_P2, &["front"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(dir.path().join("out/front.csv")).unwrap();
    let backbone = fs::read(dir.path().join("out/backbone.csv")).unwrap();
    let report = read_json(&dir.path().join("out/front_report.json"));
    assert_eq!(report["converged"], Value::Bool(true));

    let o = frontlab(dir.path(), NICHOLSON_P2, &["backbone"]);
    assert_eq!(code(&o), 0);
    let o = frontlab(dir.path(), NICHOLSON_P2, &["front"]);
    assert_eq!(code(&o), 0);
    assert_eq!(backbone, fs::read(dir.path().join("out/backbone.csv")).unwrap());
    assert_eq!(first, fs::read(dir.path().join("out/front.csv")).unwrap());

    let slow = NICHOLSON_P2.to_string() + "\n[solver]\nmax_iter = 3\n";
    let o = frontlab(dir.path(), &slow, &["front"]);
    assert_eq!(code(&o), 1);
    let report = read_json(&dir.path().join("out/front_report.json"));
    assert_eq!(report["converged"], Value::Bool(false));

    let too_slow = NICHOLSON_P2.replace("c = 16.0", "c = 1.0");
    let o = frontlab(dir.path(), &too_slow, &["front"]);
    assert_eq!(code(&o), 1);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "domain");
}
