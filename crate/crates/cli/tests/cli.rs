use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_impulse-gc"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn endpoint(stdout: &[u8]) -> Vec<f64> {
    let text = String::from_utf8_lossy(stdout);
    let line = text.lines().find(|l| l.starts_with("endpoint x(T)")).expect("endpoint line");
    let inner = line.split('[').nth(1).unwrap().trim_end_matches(']');
    inner.split(',').map(|c| c.trim().parse().unwrap()).collect()
}

fn last_row(csv: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(csv).unwrap();
    text.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect()
}

#[test]
fn list_names_all_scenarios() {
    let out = run(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["example-2.1", "example-2.2", "brockett", "scalar-jump", "commutative-pair", "brockett-v2-jump"] {
        assert!(text.contains(id), "{id} missing");
    }
}

#[test]
fn unknown_scenario_exits_2() {
    let out = run(&["run", "no-such"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such"));
}

#[test]
fn bad_ks_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "scalar-jump", "--ks", "64,16", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn example_21_writes_sweep_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "example-2.1", "--ks", "16,64,256", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    for f in ["j_sweep.csv", "traj_k16.csv", "traj_k64.csv", "traj_k256.csv", "gap_table.csv", "checks.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let sweep = std::fs::read_to_string(dir.path().join("j_sweep.csv")).unwrap();
    assert!(sweep.starts_with("k,source,cost\n"));
    let gap = std::fs::read_to_string(dir.path().join("gap_table.csv")).unwrap();
    assert!(gap.starts_with("class,cost\nregular,"));
}

#[test]
fn scalar_jump_reports_unit_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "scalar-jump", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(endpoint(&out.stdout), vec![1.0]);
    let report = std::fs::read_to_string(dir.path().join("approx_report.csv")).unwrap();
    assert!(report.starts_with("k,var_uk,sup_dist,l1_u,l1_v,psi2_gap,gronwall_lhs,gronwall_rhs\n"));
    assert_eq!(report.lines().count(), 4);
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "brockett", "--format", "json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("approx_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("traj_completion.json").exists());
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&["run", "brockett-v2-jump", "--out", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["approx_report.csv", "traj_completion.csv", "traj_k256.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn failing_check_exits_1() {
    // a few steps per oscillation cannot reproduce the closed form
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "example-2.1", "--ks", "4096", "--steps", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("closed_form_k4096"));
}

#[test]
fn complete_scalar_jump_steps_at_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["complete", fixture("scalar_jump.json").to_str().unwrap(), "scalar-jump", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let expect = if cols[0] >= 0.5 { 1.0 } else { 0.0 };
        assert_eq!(cols[1], expect, "t = {}", cols[0]);
    }
    for f in ["completion.json", "clock.json", "path.csv", "jumps.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn bridge_choice_changes_brockett_endpoint() {
    let file = fixture("brockett_jump.json");
    let mut x3 = Vec::new();
    for bridge in ["straight", "two-leg"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&["complete", file.to_str().unwrap(), "brockett", "--bridge", bridge, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        x3.push(last_row(&dir.path().join("solution.csv"))[3]);
    }
    assert!((x3[1] - x3[0] - 1.0).abs() < 1e-3, "{x3:?}");
}

#[test]
fn bridge_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let bridge = format!("file:{}", fixture("l_bridge.json").display());
    let out = run(&["complete", fixture("brockett_jump.json").to_str().unwrap(), "brockett", "--bridge", &bridge, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    // going up first sweeps the opposite orientation
    assert!((endpoint(&out.stdout)[2] + 1.0).abs() < 1e-9);
}

#[test]
fn half_speed_without_normalization_matches() {
    let file = fixture("brockett_jump.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = run(&["complete", file.to_str().unwrap(), "brockett", "--bridge", "two-leg", "--out", a.path().to_str().unwrap()]);
    let slow = run(&[
        "complete", file.to_str().unwrap(), "brockett", "--bridge", "two-leg", "--speed", "0.5", "--no-normalize",
        "--out", b.path().to_str().unwrap(),
    ]);
    assert!(base.status.success() && slow.status.success());
    let ra = std::fs::read_to_string(a.path().join("solution.csv")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("solution.csv")).unwrap();
    for (la, lb) in ra.lines().skip(1).zip(rb.lines().skip(1)) {
        let pa: Vec<f64> = la.split(',').map(|c| c.parse().unwrap()).collect();
        let pb: Vec<f64> = lb.split(',').map(|c| c.parse().unwrap()).collect();
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() <= 4e-8, "{la} vs {lb}");
        }
    }
}

#[test]
fn malformed_control_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"u\": 3}").unwrap();
    let out = run(&["complete", bad.to_str().unwrap(), "scalar-jump", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_must_be_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "example-2.1", "--ks", "16", "--out", dir.path().to_str().unwrap()])
        .env("IMPULSE_GC_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
