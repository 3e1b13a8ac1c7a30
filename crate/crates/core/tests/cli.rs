use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ostrovsky-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

#[test]
fn no_args_prints_catalog() {
    let out = lab(&[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["identities", "gamma-seq", "probe-bilinear", "counterexample", "kdv-limit", "lipschitz"] {
        assert!(text.contains(name), "{name} missing from catalog");
    }
}

#[test]
fn unknown_subcommand_suggests() {
    let out = lab(&["identitys"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("identities"));
}

#[test]
fn help_lists_defaults() {
    let out = lab(&["probe-bilinear", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("--samples") && text.contains("[default: 30]"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = lab(&[
            "probe-conv",
            "--scales",
            "2..3",
            "--samples",
            "4",
            "--grid",
            "64",
            "--seed",
            "9",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["report.csv", "report.json", "manifest.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep\nsamples = 50\nseed = 4\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = lab(&[
        "identities",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "20",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&read(&out_dir, "manifest.json")).unwrap();
    assert_eq!(manifest["inputs"]["samples"], "20");
    assert_eq!(manifest["seed"], 4);
    let report: serde_json::Value = serde_json::from_slice(&read(&out_dir, "report.json")).unwrap();
    assert_eq!(report["samples"], 20);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let bad = lab(&["counterexample", "--example", "1", "--b", "0.3", "--out", out_dir]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("`b`"));
    let unknown = lab(&["solve", "--config", "/nonexistent/file", "--out", out_dir]);
    assert_eq!(unknown.status.code(), Some(2));
    let blowup = lab(&["solve", "--amplitude", "1e6", "--n", "64", "--dt", "0.1", "--out", out_dir]);
    assert_eq!(blowup.status.code(), Some(3));
}

#[test]
fn solve_example_conserves_l2() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&[
        "solve",
        "--data",
        "gaussian",
        "--T",
        "0.5",
        "--scheme",
        "if_rk4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&read(dir.path(), "summary.json")).unwrap();
    assert!(summary["summary"]["l2_drift"].as_f64().unwrap() <= 1e-6);
    let csv = String::from_utf8(read(dir.path(), "trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,u\n"));
}
