use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auxetica")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn family(dir: &Path, lambda: &str) -> PathBuf {
    let path = dir.join(format!("family_{}.json", lambda.replace('/', "_")));
    let out = run(&["family", lambda, path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn decide_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let yes = run(&["decide", family(dir.path(), "1/6").to_str().unwrap()]);
    assert_eq!(yes.status.code(), Some(0));
    assert!(stdout(&yes).contains("S = -2287/4000752"));
    assert!(stdout(&yes).contains("verdict: AUXETIC"));

    let singular = run(&["decide", family(dir.path(), "1/3").to_str().unwrap()]);
    assert_eq!(singular.status.code(), Some(2));
    assert!(stdout(&singular).contains("cubic is singular"));

    let no = run(&["decide", "--float", family(dir.path(), "5/12").to_str().unwrap()]);
    assert_eq!(no.status.code(), Some(1));
}

#[test]
fn json_report_carries_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["decide", "--json", family(dir.path(), "5/12").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], "NOT_AUXETIC");
    assert_eq!(report["format"], "auxetica/1");
    assert!((report["k"].as_f64().unwrap() - 10.6042).abs() < 5e-5);
    assert_eq!(report["invariants"]["k_4dp"], "10.6042");
    assert_eq!(report["invariants"]["delta"], "7353062500/37144672966729275363");
}

#[test]
fn json_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = family(dir.path(), "1/6");
    let a = run(&["decide", "--json", path.to_str().unwrap()]);
    let b = run(&["decide", "--json", path.to_str().unwrap()]);
    let strip = |o: &Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn batch_decide_reports_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = family(dir.path(), "1/6");
    let b = family(dir.path(), "1/4");
    let out = run(&["decide", "--jobs", "2", a.to_str().unwrap(), b.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("family_1_6.json") && text.contains("family_1_4.json"));
}

#[test]
fn invariants_of_documents() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["invariants", family(dir.path(), "1/6").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Delta = 1000000/22067482534159923"));

    let out = run(&["invariants", family(dir.path(), "1/3").to_str().unwrap()]);
    assert!(stdout(&out).contains("Delta = 0 (singular cubic)"));

    let fermat = write(
        dir.path(),
        "fermat_cubic.json",
        r#"{"format":"auxetica/1","kind":"cubic","coefficients":[1,1,1,0,0,0,0,0,0,0]}"#,
    );
    let out = run(&["invariants", "--json", fermat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["invariants"]["J"], "0");
}

#[test]
fn pencil_documents_give_the_hesse_parameter() {
    let dir = tempfile::tempdir().unwrap();
    // [[X, 2Z, 2Y], [2Z, Y, 2X], [2Y, 2X, Z]] has determinant
    // −4(X³ + Y³ + Z³ − 3k·XYZ) with k = 17/12.
    let pencil = write(
        dir.path(),
        "pencil.json",
        r#"{"format":"auxetica/1","kind":"pencil","forms":[[1,0,0],[0,1,0],[0,0,1],[2,0,0],[0,2,0],[0,0,2]]}"#,
    );
    let out = run(&["invariants", "--json", pencil.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["cubic"]["xyz"], "17");
    let k = report["invariants"]["k"].as_f64().unwrap();
    assert!((k - 17.0 / 12.0).abs() < 1e-9, "k = {k}");
}

#[test]
fn deform_prints_the_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["deform", family(dir.path(), "1/6").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("[1, 5/14, 5/14]"));
    assert!(text.contains("qdot1 = (4/7, 4/7, 4/7)"));
    assert!(text.contains("residual = 0"));
}

#[test]
fn simulate_writes_one_record_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("traj.jsonl");
    let out = run(&["simulate", family(dir.path(), "1/6").to_str().unwrap(), out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let records: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 51);
    for r in &records {
        assert_eq!(r["gram"].as_array().unwrap().len(), 9);
        assert_eq!(r["coordinates"].as_array().unwrap().len(), 3);
        assert!(r["drift"].as_f64().unwrap() < 1e-8);
    }
    assert!((records[50]["tau"].as_f64().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn simulate_refuses_non_auxetic_start() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("traj.jsonl");
    let out = run(&["simulate", family(dir.path(), "5/12").to_str().unwrap(), out_path.to_str().unwrap()]);
    assert!(out.status.code().unwrap() > 2);
}

#[test]
fn plot_writes_polylines_on_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("plot.json");
    let out = run(&["plot", family(dir.path(), "1/6").to_str().unwrap(), out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let plot: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let lines = plot["polylines"].as_array().unwrap();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l.as_array().unwrap().len() >= 2));
}

#[test]
fn errors_use_codes_above_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["decide", missing.to_str().unwrap()]).status.code(), Some(3));

    let bad = write(dir.path(), "bad.json", "{\"format\": \"auxetica/1\",\n \"dimension\": 2}");
    let out = run(&["decide", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));

    let f = family(dir.path(), "1/6");
    assert_eq!(run(&["decide", "--exact", "--float", f.to_str().unwrap()]).status.code(), Some(3));
    assert!(run(&["decide", "--tolerance", "-1", f.to_str().unwrap()]).status.code().unwrap() > 2);
}

#[test]
fn family_then_decide_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = family(dir.path(), "1/6");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["format"], "auxetica/1");
    assert_eq!(doc["vertices"][1][0], "1/6");
    assert_eq!(run(&["decide", path.to_str().unwrap()]).status.code(), Some(0));
}
