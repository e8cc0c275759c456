use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn seaplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seaplan"))
        .args(args)
        .env("SEAPLAN_LOG", "error")
        .output()
        .expect("spawn seaplan")
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(String::from).collect()
}

#[test]
fn plan_writes_one_row_per_slot() {
    let dir = tempfile::tempdir().unwrap();
    let out = seaplan(&["plan", "--scenario", arg(&shipped("paper.json")), "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let plan = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    let mut lines = plan.lines();
    assert_eq!(lines.next(), Some("slot,x,y,z,vx,vy,vz,ax,ay,az,P_watts,avg_snr,ergodic_rate_bps_hz"));
    assert_eq!(lines.count(), 10);
    let trace = data_rows(&dir.path().join("trace.csv"));
    assert!(trace.len() >= 2);
    assert!(trace[0].starts_with("0,"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("final Q"));
}

#[test]
fn missing_scenario_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.json");
    let out = seaplan(&["plan", "--scenario", arg(&missing), "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
}

#[test]
fn malformed_scenario_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"geometry\": 3}").unwrap();
    let out = seaplan(&["plan", "--scenario", arg(&bad), "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = seaplan(&["plan", "--scenario", arg(&shipped("toy.json")), "--out", arg(d.path())]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["plan.csv", "trace.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn single_point_sweep_matches_plan() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = shipped("paper.json");
    let plan = seaplan(&["plan", "--scenario", arg(&scenario), "--out", arg(dir.path())]);
    assert_eq!(plan.status.code(), Some(0));
    let sweep = seaplan(&[
        "sweep", "--scenario", arg(&scenario), "--out", arg(dir.path()),
        "--axis", "i0", "--from", "-55", "--to", "-55", "--step", "1",
    ]);
    assert_eq!(sweep.status.code(), Some(0), "{}", String::from_utf8_lossy(&sweep.stderr));
    let rows = data_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[0], "-55");
    let trace = data_rows(&dir.path().join("trace.csv"));
    let last: Vec<&str> = trace.last().unwrap().split(',').collect();
    assert_eq!(fields[1], last[2]);
    assert_eq!(fields[3], last[0]);
}

#[test]
fn sweep_rejects_bad_axis() {
    let dir = tempfile::tempdir().unwrap();
    let out = seaplan(&[
        "sweep", "--scenario", arg(&shipped("paper.json")), "--out", arg(dir.path()),
        "--axis", "bandwidth", "--from", "1", "--to", "2", "--step", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let out = seaplan(&["verify", "--k", "10", "--mc-samples", "1000"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn builtin_scenarios_match_shipped_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["paper", "toy"] {
        let path = dir.path().join(format!("{name}.json"));
        let out = seaplan(&["scenario", "--name", name, "--out", arg(&path)]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(shipped(&format!("{name}.json"))).unwrap(),
            "{name}"
        );
    }
}
