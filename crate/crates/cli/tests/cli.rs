use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kcmfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcmfold"))
        .args(args)
        .env_remove("KCMFOLD_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = kcmfold(&["simulate", "--out", path(dir.path()), "--iters", "30"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectory.csv", "initial.xyz", "final.xyz", "summary.json"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let text = stdout(&out);
    assert!(text.contains("budget-exhausted") || text.contains("converged"));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    // header comment, column names, steps 0..=30
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn ods_summary_reports_utilization_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = kcmfold(&[
        "simulate", "--out", path(dir.path()), "--mode", "ods-qp", "--rho", "9", "--iters", "40", "--format", "jsonl",
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let util = summary["max_bound_utilization"].as_f64().unwrap();
    assert!(util <= 1.0);
    assert!(dir.path().join("trajectory.jsonl").is_file());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kcmfold"))
        .args(["simulate", "--iters", "3"])
        .env("KCMFOLD_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("trajectory.csv").is_file());
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    for args in [
        vec!["simulate", "--out", d, "--mode", "ods-qp", "--rho", "-1"],
        vec!["simulate", "--out", d, "--mode", "ods-qp", "--rho", "0"],
        vec!["simulate", "--out", d, "--h", "0"],
        vec!["simulate", "--out", d, "--init", "spiral"],
        vec!["simulate", "--out", d, "--h", "abc"],
        vec!["compare", "--out", d, "--variant", "conventional"],
        vec!["compare", "--out", d, "--variant", "conventional", "--variant", "ods:x"],
    ] {
        let out = kcmfold(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn bad_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    assert!(kcmfold(&["gen-spec", "--planes", "2", "--out", path(&spec)]).status.success());
    let text = fs::read_to_string(&spec).unwrap();
    let broken = text.replacen("axis = [1.0, 0.0, 0.0]", "axis = [0.9, 0.0, 0.0]", 1);
    assert_ne!(broken, text);
    fs::write(&spec, broken).unwrap();
    let out = kcmfold(&["simulate", "--spec", path(&spec), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("joint[0].axis"));
}

#[test]
fn compare_tabulates_and_flags_stalls() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("three.toml");
    assert!(kcmfold(&["gen-spec", "--planes", "3", "--out", path(&spec)]).status.success());
    let out_dir = dir.path().join("cmp");
    let out = kcmfold(&[
        "compare",
        "--spec",
        path(&spec),
        "--out",
        path(&out_dir),
        "--iters",
        "300",
        "--variant",
        "conventional",
        "--variant",
        "conventional",
        "--variant",
        "bound:0.01",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with(char::is_numeric)).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains(" 0.000000e0 "), "{}", rows[1]);
    assert!(rows[2].contains("stalled") && rows[2].trim_end().ends_with("yes"));
    let table = fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    let header = table.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 7);
    assert!(out_dir.join("2_bound-0.01").join("trajectory.csv").is_file());
}

#[test]
fn check_reports_every_condition() {
    let out = kcmfold(&["check"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    assert!(text.contains("omega > 0: true"));
}
