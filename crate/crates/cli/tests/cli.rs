use std::f64::consts::PI;
use std::process::{Command, Output};

use pkfield::io::CsvTable;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pkfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn table(args: &[&str]) -> (String, Vec<Vec<f64>>) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let (_, rows) = CsvTable::parse(&text).unwrap();
    (text, rows)
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn classify_examples() {
    assert_eq!(json(&["classify", "--gamma", "1"])["class"], "M2_3");
    let v = json(&["classify", "--gamma", "2"]);
    assert_eq!(v["class"], "M2_1");
    assert_eq!(v["roots"].as_array().unwrap().len(), 4);
    assert_eq!(v["config"]["gamma"], 2.0);
    let bad = run(&["classify", "--a1", "1", "--a2", "-10"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("not in M2"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["classify"]).status.code(), Some(2));
    assert_eq!(
        run(&["tau", "--r", "1.5", "--t", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["willmore", "--r", "0.5", "--t", "9"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    let out = run(&["flow", "--gamma", "2", "--to", "1", "0", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step size"));
}

#[test]
fn tau_of_clifford() {
    for args in [
        &["tau", "--gamma", "1"][..],
        &["tau", "--r", "1", "--t", "0"][..],
    ] {
        let (re, im) = pair(&json(args)["tau_hat"]);
        assert!(re.abs() < 1e-12 && (im - 1.0).abs() < 1e-12);
    }
}

#[test]
fn willmore_routes() {
    let v = json(&["willmore", "--r", "1", "--t", "1"]);
    let want = 2.0 * PI * PI * (2.0f64).cosh();
    assert!((v["w_explicit"].as_f64().unwrap() - want).abs() < 1e-9 * want);
    assert!(v["residue_vs_explicit"].as_f64().unwrap() < 1e-6);
    assert!(v["direct_vs_explicit"].as_f64().unwrap() < 1e-3);
}

#[test]
fn flow_reports_drift() {
    let v = json(&["flow", "--gamma", "2", "--to", "1", "0"]);
    assert!(v["drift"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["start"]["gamma"], 2.0);
    let (text, rows) = table(&[
        "flow", "--gamma", "2", "--to", "1", "0.5", "--grid", "4", "--format", "csv",
    ]);
    assert!(text.starts_with("# command=flow\n"));
    assert!(text.contains("x,y,re_alpha,im_alpha,re_beta,im_beta,gamma\n"));
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][6], 2.0);
}

#[test]
fn lattices() {
    let v = json(&["lattice", "--a1", "0", "0", "--a2", "4.25"]);
    assert_eq!(v["class"], "M2_1");
    assert!(v["bperiod_residual"].as_f64().unwrap() < 1e-7);
    let (a, b) = (pair(&v["omega1"]), pair(&v["omega2"]));
    assert!(((a.0 * a.0 + a.1 * a.1) - (b.0 * b.0 + b.1 * b.1)).abs() < 1e-10);
    let g = json(&["lattice", "--r", "0.5", "--t", "0.3"]);
    assert_eq!(g["class"], "M2_2");
    assert_eq!(
        run(&["lattice", "--a1", "-4", "--a2", "6"]).status.code(),
        Some(2)
    );
}

#[test]
fn figure3_anchors() {
    let (text, rows) = table(&["figure3", "--r-list", "1.0", "--t-steps", "9"]);
    assert!(text.lines().any(|l| l == "r,t,re_tau_tilde,im_tau_tilde"));
    assert_eq!(rows.len(), 9);
    for r in &rows {
        assert!((r[2].hypot(r[3]) - 1.0).abs() < 1e-12);
    }
    let (_, near) = table(&[
        "figure3",
        "--r-list",
        "0.999",
        "--t-steps",
        "9",
        "--t-range",
        "1.5",
    ]);
    let (_, one) = table(&[
        "figure3",
        "--r-list",
        "1.0",
        "--t-steps",
        "9",
        "--t-range",
        "1.5",
    ]);
    for (a, b) in near.iter().zip(&one) {
        assert_eq!(a[1], b[1]);
        assert!((a[2] - b[2]).hypot(a[3] - b[3]) < 1e-2);
    }
}

#[test]
fn figure4_anchor_and_symmetry() {
    let (_, rows) = table(&["figure4", "--r-list", "0.5,1", "--t-steps", "7"]);
    let anchor = rows
        .iter()
        .find(|r| r[0] == 1.0 && r[1] == 0.0)
        .expect("Clifford row");
    assert!(anchor[2].abs() < 1e-12 && (anchor[3] - 1.0).abs() < 1e-12);
    assert!((anchor[4] - 2.0 * PI * PI).abs() < 1e-9);
    for block in rows.chunks(7) {
        for k in 0..7 {
            assert_eq!(block[k][1], -block[6 - k][1]);
            assert!((block[k][4] - block[6 - k][4]).abs() < 1e-9 * block[k][4]);
        }
    }
}

#[test]
fn deterministic_across_job_counts() {
    let a = run(&[
        "figure4",
        "--r-list",
        "0.3,0.7,1",
        "--t-steps",
        "11",
        "--jobs",
        "1",
    ]);
    let b = run(&[
        "figure4",
        "--r-list",
        "0.3,0.7,1",
        "--t-steps",
        "11",
        "--jobs",
        "4",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let j = json(&[
        "figure3",
        "--r-list",
        "0.5",
        "--t-steps",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(j["rows"].as_array().unwrap().len(), 3);
    assert_eq!(j["config"]["t_steps"], "3");
}

#[test]
fn immersion_export_writes_obj() {
    let dir = std::env::temp_dir().join(format!("pkfield-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("torus.obj");
    let v = json(&[
        "immersion-export",
        "--r",
        "0.5",
        "--t",
        "0.2",
        "--grid",
        "6",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(v["closing_defect"].as_f64().unwrap() < 1e-8);
    assert!(v["periodicity_defect"].as_f64().unwrap() < 1e-5);
    let obj = std::fs::read_to_string(&path).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 49);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 36);
    assert!(obj.starts_with("# command=immersion-export\n"));
    std::fs::remove_dir_all(&dir).ok();
}
