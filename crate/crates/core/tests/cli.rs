mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn mixwass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixwass"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn moments_command() {
    let out = mixwass(&[
        "moments",
        "--measure",
        r#"{"type": "gaussian-mixture", "components": [{"weight": 1, "mean": 0, "sigma": 1}]}"#,
        "--degree",
        "4",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "[1.0,0.0,1.0,0.0,3.0]");

    let out = mixwass(&[
        "moments",
        "--measure",
        r#"{"type": "dirac-mixture", "atoms": [{"weight": 1, "location": 0.5}]}"#,
        "--degree",
        "2",
    ]);
    assert_eq!(stdout(&out).trim(), "[1.0,0.5,0.25]");

    let out = mixwass(&["moments", "--measure", r#"{"type": "normal"}"#]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown variant"));
}

#[test]
fn distance_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("dirac_not_mixture.json");
    let out = mixwass(&["distance", "--config", path(&cfg), "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["certificate"]["kind"], "not-mixture");
    let tau = report["certificate"]["tau"].as_f64().unwrap();
    assert!((tau - 4e-4).abs() < 1e-5);
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("n,tau_n,taustar_n,gap,status,flat,rank\n2,"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("zero_value.json");
    let out = mixwass(&[
        "distance",
        "--config",
        path(&cfg),
        "--out",
        path(dir.path()),
        "--order-max",
        "1",
        "--epsilon",
        "1e-4",
        "--tol",
        "1e-7",
        "--eps-rank",
        "1e-5",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(stdout(&out).contains("inconclusive"));
}

#[test]
fn order_cap_below_n0_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = mixwass(&[
        "distance",
        "--config",
        path(&fixture("bad_orders.json")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_exits_with_io_code() {
    let out = mixwass(&["distance", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"measure": {"type": "dirac-mixture", "atoms": [{"weight": 1, "location": 0}]},
            "set": {"type": "box", "m": [0, 1], "sigma": [0.1, 1]}, "colour": "red"}"#,
    )
    .unwrap();
    let out = mixwass(&["distance", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identify_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = mixwass(&[
        "identify",
        "--config",
        path(&fixture("zero_value.json")),
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("mixture-candidate"));
    assert!(text.contains("verified up to degree"));

    let report_path = dir.path().join("report.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let expected = &report["certificate"]["verification"]["residuals"];
    let measure = r#"{"type": "gaussian-mixture", "components": [{"weight": 1, "mean": 0.3, "sigma": 0.1}]}"#;
    let out = mixwass(&["verify", "--measure", measure, "--candidate", path(&report_path)]);
    assert_eq!(out.status.code(), Some(0));
    let result: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(&result["residuals"], expected);
}

#[test]
fn verify_accepts_and_rejects_candidates() {
    let measure = fixture("two_component_measure.json");
    let good = mixwass(&[
        "verify",
        "--measure",
        path(&measure),
        "--candidate",
        path(&fixture("two_component_candidate.json")),
        "--order",
        "6",
        "--extra",
        "6",
    ]);
    assert_eq!(good.status.code(), Some(0));
    let bad = mixwass(&[
        "verify",
        "--measure",
        path(&measure),
        "--candidate",
        path(&fixture("two_component_swapped.json")),
        "--order",
        "6",
        "--extra",
        "4",
    ]);
    assert_eq!(bad.status.code(), Some(4));
    let result: serde_json::Value = serde_json::from_str(&stdout(&bad)).unwrap();
    assert_eq!(result["verified"], false);
}
