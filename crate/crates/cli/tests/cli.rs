use std::path::PathBuf;
use std::process::{Command, Output};

fn gmeb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmeb")).args(args).output().expect("binary runs")
}

fn example() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/three_subspaces.gss").to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_prints_result_json() {
    let v = stdout_json(&gmeb(&["solve", "--input", &example(), "--k", "1"]));
    assert!((v["primal_cost"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-9);
    assert!(v["duality_gap"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["lambda"].as_array().unwrap().len(), 3);
}

#[test]
fn warm_start_accepts_inline_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("r.json");
    let r = result.to_str().unwrap();
    assert!(gmeb(&["solve", "--input", &example(), "--k", "2", "--out", r]).status.success());
    let v = stdout_json(&gmeb(&["solve", "--input", &example(), "--k", "2", "--warm-start", r]));
    assert!((v["primal_cost"].as_f64().unwrap() - (14.0 - 3.0 * 7f64.sqrt()) / 24.0).abs() < 1e-6);
    let v = stdout_json(&gmeb(&["solve", "--input", &example(), "--k", "2", "--warm-start", "[0.5, 0.5, 0.0]"]));
    assert!(v["duality_gap"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn order_reports_each_rule() {
    let out = gmeb(&["order", "--input", &example(), "--rule", "all"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("proposed: 1"), "{text}");
    for rule in ["hybrid:", "mse:", "svd-elbow:"] {
        assert!(text.contains(rule), "{text}");
    }
}

#[test]
fn gen_writes_collection_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.gss");
    let p = path.to_str().unwrap();
    let out = gmeb(&["gen", "--model", "nested-ball", "--n", "8", "--k0", "2", "--m1", "5", "--m2", "3", "--seed", "4", "--out", p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["truth_k"], 2);
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(first.starts_with("8 8\n"));

    let again = dir.path().join("e.gss");
    gmeb(&["gen", "--model", "nested-ball", "--n", "8", "--k0", "2", "--m1", "5", "--m2", "3", "--seed", "4", "--out", again.to_str().unwrap()]);
    assert_eq!(first, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn experiment_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("acc.csv");
    let out = gmeb(&["experiment", "accuracy", "--trials", "2", "--seed", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(&path).unwrap();
    assert!(rows.lines().count() > 2);
    assert!(dir.path().join("acc.summary.csv").exists());
}

#[test]
fn mds_reads_a_distance_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "0,3,4\n3,0,5\n4,5,0\n").unwrap();
    let out = gmeb(&["mds", "--input", path.to_str().unwrap()]);
    assert!(out.status.success());
    let pts: Vec<(f64, f64)> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect();
    let d = |i: usize, j: usize| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
    assert!((d(0, 1) - 3.0).abs() < 1e-9 && (d(0, 2) - 4.0).abs() < 1e-9 && (d(1, 2) - 5.0).abs() < 1e-9);
}

#[test]
fn exit_codes_separate_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gss");
    std::fs::write(&bad, "2 1\n1\n1.0\n").unwrap();
    let out = gmeb(&["solve", "--input", bad.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(gmeb(&["solve", "--input", &example(), "--k", "6"]).status.code(), Some(2));
    assert_eq!(gmeb(&["solve", "--input", &example(), "--k", "1", "--beta", "0.5"]).status.code(), Some(2));
    assert_eq!(gmeb(&["solve", "--input", &example(), "--k", "1", "--warm-start", "[1.0]"]).status.code(), Some(2));
    assert_eq!(gmeb(&["solve", "--input", &example(), "--k", "1", "--step-mode", "bogus"]).status.code(), Some(2));
}
