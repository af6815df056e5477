use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatsteer")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const ZERO: &str = r#"{
  "schema_version": 1,
  "problem": {"setting": "neumann", "horizon": 0.5},
  "target": {"kind": "builtin", "name": "zero"},
  "synthesis": {"method": "petzsche", "r_prime": 1.21},
  "simulation": {"nx": 64, "nt": 64}
}"#;

const LAPLACE: &str = r#"{
  "schema_version": 1,
  "problem": {"setting": "neumann", "horizon": 0.5},
  "synthesis": {"method": "laplace", "kernel": {"kind": "zeta", "zeta": 0.8}, "d0": 1.0, "r": 1.5},
  "simulation": {"nx": 64, "nt": 64}
}"#;

#[test]
fn zero_target_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "zero.json", ZERO);
    let out = tmp.path().join("out");
    let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["control_right.csv", "terminal.csv", "report.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "verify");
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("version.json", ZERO.replace("\"schema_version\": 1", "\"schema_version\": 7")),
        ("unknown.json", ZERO.replace("\"horizon\": 0.5", "\"horizon\": 0.5, \"speed\": 2")),
        ("radius.json", ZERO.replace("1.21", "1.1")),
        ("grid.json", ZERO.replace("\"nx\": 64", "\"nx\": 4")),
        ("syntax.json", "{ not json".to_string()),
    ];
    for (name, text) in cases {
        let cfg = write(tmp.path(), name, &text);
        let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "{name} left partial output");
    }
}

#[test]
fn synth_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "laplace.json", LAPLACE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = run(&["synth", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let right = fs::read(a.join("control_right.csv")).unwrap();
    assert!(!right.is_empty());
    assert_eq!(right, fs::read(b.join("control_right.csv")).unwrap());
}

#[test]
fn classify_prints_the_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "classify.json",
        r#"{
          "schema_version": 1,
          "problem": {"setting": "two-sided", "horizon": 1.0},
          "target": {"kind": "builtin", "name": "inverse-quadratic", "a": 0.4, "center": 0.5}
        }"#,
    );
    let out = tmp.path().join("out");
    let o = run(&["classify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("classification.json").exists());
}

#[test]
fn precision_flag_is_range_checked() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "zero.json", ZERO);
    let out = tmp.path().join("out");
    let o = run(&["synth", "--config", &cfg, "--out", out.to_str().unwrap(), "--precision", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}
