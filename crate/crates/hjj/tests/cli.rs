use std::path::{Path, PathBuf};
use std::process::Command;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn hjj(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_hjj"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HJJ_THREADS")
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into(), String::from_utf8_lossy(&o.stderr).into())
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn snapshot_value(tsv: &str, x: f64) -> f64 {
    tsv.lines()
        .skip(1)
        .map(|l| l.split('\t').collect::<Vec<_>>())
        .find(|c| (c[0].parse::<f64>().unwrap() - x).abs() < 1e-9)
        .map(|c| c[1].parse().unwrap())
        .unwrap()
}

#[test]
fn solve_model_problem() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("model.json");
    let (code, _, err) = hjj(&["solve", "--problem", p.to_str().unwrap(), "--report-times", "0.5,1"], dir.path());
    assert_eq!(code, 0, "{err}");
    let csv = read(dir.path().join("solve_field.csv"));
    assert!(csv.starts_with("t,x,u\n"));
    assert!(!csv.contains('\r'));
    let snap = read(dir.path().join("solve_t1.tsv"));
    assert!(snapshot_value(&snap, 0.0).abs() <= 0.05);
    assert!((snapshot_value(&snap, 1.5) - 1.0).abs() <= 0.05);
    assert!(dir.path().join("solve_t0.5.tsv").exists());
}

#[test]
fn value_model_problem() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("model.json");
    let (code, _, err) = hjj(&["value", "--problem", p.to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{err}");
    let snap = read(dir.path().join("value_t1.tsv"));
    assert!(snapshot_value(&snap, 0.0).abs() <= 0.05);
}

#[test]
fn value_at_zero_horizon_is_the_datum() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("model.json");
    let (code, _, err) = hjj(&["value", "--problem", p.to_str().unwrap(), "--T", "0"], dir.path());
    assert_eq!(code, 0, "{err}");
    let csv = read(dir.path().join("value_field.csv"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")));
}

#[test]
fn value_without_control_block_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("step_limiter.json");
    let (code, _, err) = hjj(&["value", "--problem", p.to_str().unwrap()], dir.path());
    assert_eq!(code, 1, "{err}");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn compare_model_problem() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("model.json");
    let (code, _, err) = hjj(&["compare", "--problem", p.to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("compare.json"))).unwrap();
    assert!(report["linf_all_levels"].as_f64().unwrap() <= 0.05);
}

#[test]
fn approx_study_and_empty_widths() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("step_limiter.json");
    let (code, _, err) = hjj(&["approx", "--problem", p.to_str().unwrap(), "--dx", "0.05"], dir.path());
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("approx.json"))).unwrap();
    let kn: Vec<f64> = report["widths"].as_array().unwrap().iter().map(|w| w["kn_l1"].as_f64().unwrap()).collect();
    assert!(kn.windows(2).all(|w| w[1] < w[0]), "{kn:?}");

    let text = read(p).replace("[0.2, 0.1, 0.05, 0.025]", "[]");
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, text).unwrap();
    let out = dir.path().join("empty_out");
    let (code, _, _) = hjj(&["approx", "--problem", empty.to_str().unwrap()], &out);
    assert_eq!(code, 1);
    assert!(!out.exists());
}

#[test]
fn flux_limiter_below_floor_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("below_floor.json");
    let (code, _, err) = hjj(&["solve", "--problem", p.to_str().unwrap()], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("below floor"), "{err}");
}

#[test]
fn explicit_dt_violating_cfl_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("model.json");
    let (code, _, err) = hjj(&["solve", "--problem", p.to_str().unwrap(), "--dt", "0.02"], dir.path());
    assert_eq!(code, 3, "{err}");
}

#[test]
fn parse_errors_report_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"schema\": 1,\n  \"T\": oops\n}\n").unwrap();
    let (code, _, err) = hjj(&["solve", "--problem", bad.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");
    let (code, _, _) = hjj(&["solve", "--dx"], &dir.path().join("o"));
    assert_eq!(code, 1);
}

#[test]
fn validate_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("star.json");
    let (code, _, err) = hjj(&["validate", "--problem", p.to_str().unwrap(), "--seed", "7"], dir.path());
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("validation.json"))).unwrap();
    let names: Vec<&str> = report.as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"flux_limiter_floor"));
    assert!(names.contains(&"edge2_convexity"));
}

#[test]
fn star_snapshots_label_edges() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("star.json");
    let (code, _, err) = hjj(&["solve", "--problem", p.to_str().unwrap(), "--dx", "0.05"], dir.path());
    assert_eq!(code, 0, "{err}");
    let snap = read(dir.path().join("solve_t0.5.tsv"));
    assert!(snap.lines().nth(1).unwrap().starts_with("0:"));
    assert!(snap.lines().any(|l| l.starts_with("2:")));
}

#[test]
fn outputs_are_deterministic() {
    let p = problem("step_limiter.json");
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_hjj"))
            .args(["approx", "--problem", p.to_str().unwrap(), "--dx", "0.05", "--out"])
            .arg(dir.path())
            .env("HJJ_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        runs.push(std::fs::read(dir.path().join("approx.json")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn report_times_outside_horizon_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("model.json");
    let (code, _, _) = hjj(&["solve", "--problem", p.to_str().unwrap(), "--report-times", "1.5"], dir.path());
    assert_eq!(code, 1);
}
