use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hilbert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hilbert")).args(args).output().expect("binary runs")
}

fn summary(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON summary")
}

fn error(out: &Output, code: i32) -> Value {
    assert_eq!(out.status.code(), Some(code), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice(&out.stderr).expect("JSON error")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn distance_on_the_disk() {
    let s = summary(&hilbert(&["--shape", "disk", "distance", "--p", "0,0", "--q", "0.5,0"]));
    let d = s["distance"].as_f64().unwrap();
    assert!((d - 0.5f64.atanh()).abs() < 1e-12, "{d}");
    assert_eq!(s["seed"], 1);
}

#[test]
fn body_files_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("tri.json");
    std::fs::write(&good, r#"{"type":"polygon","vertices":[[0,0],[1,0],[0,1]]}"#).unwrap();
    let s = summary(&hilbert(&["--body", good.to_str().unwrap(), "distance", "--p", "0.2,0.2", "--q", "0.3,0.3"]));
    assert!(s["distance"].as_f64().unwrap() > 0.0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"type":"polygon","vertices":[[0,0],[1,0],[0,1]],"colour":"red"}"#).unwrap();
    let e = error(&hilbert(&["--body", bad.to_str().unwrap(), "distance", "--p", "0.2,0.2", "--q", "0.3,0.3"]), 1);
    assert_eq!(e["error"], "validation");
    assert!(e["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn invalid_input_exits_with_one() {
    let e = error(&hilbert(&["distance", "--p", "2,2", "--q", "0.3,0.3"]), 1);
    assert_eq!(e["error"], "validation");
    error(&hilbert(&["distance", "--p", "0.1"]), 1);
    error(&hilbert(&["net", "--epsilon", "-1"]), 1);
    error(&hilbert(&["selftest", "--only", "14"]), 1);
    error(&hilbert(&["nonsense"]), 1);
}

#[test]
fn ball_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = summary(&hilbert(&["--seed", "7", "--out", out, "ball", "--radii", "1,2"]));
    assert_eq!(s["files"], serde_json::json!(["ball.csv", "ball.svg"]));
    let csv = read(dir.path(), "ball.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# seed,7"));
    assert_eq!(lines.next(), Some("radius,index,x,y"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|t| t.parse().unwrap()).collect()).collect();
    assert!(rows.iter().any(|r| r[0] == 2.0));
    // every vertex is inside the triangle
    assert!(rows.iter().all(|r| r[2] > 0.0 && r[3] > 0.0 && r[2] + r[3] < 1.0));
    assert!(read(dir.path(), "ball.svg").starts_with("<svg"));
}

#[test]
fn horospheres_in_the_triangle_are_nested() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = summary(&hilbert(&["--out", out, "horosphere", "--points", "64"]));
    assert_eq!(s["anchors"].as_array().unwrap().len(), 3);
    let csv = read(dir.path(), "horosphere.csv");
    let mut by_anchor = vec![Vec::new(); 3];
    for l in csv.lines().skip(2) {
        let f: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
        by_anchor[f[0] as usize].push((f[2], f[3]));
    }
    // anchors move towards the base vertex (0,0): the curves move with them
    let mean = |v: &Vec<(f64, f64)>| v.iter().map(|p| p.0 + p.1).sum::<f64>() / v.len() as f64;
    assert!(mean(&by_anchor[0]) > mean(&by_anchor[1]) && mean(&by_anchor[1]) > mean(&by_anchor[2]));
    assert!(read(dir.path(), "horosphere.svg").contains("<path"));
}

#[test]
fn nets_are_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path, threads: &'static str| {
        vec![
            "--seed".to_string(),
            "3".into(),
            "--threads".into(),
            threads.into(),
            "--out".into(),
            dir.to_str().unwrap().into(),
            "graph".into(),
            "--radius".into(),
            "3".into(),
        ]
    };
    let run = |v: Vec<String>| hilbert(&v.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    let sa = summary(&run(args(a.path(), "1")));
    let sb = summary(&run(args(b.path(), "4")));
    assert_eq!(sa["vertices"], sb["vertices"]);
    assert_eq!(sa["connected"], true);
    for f in ["net.csv", "graph.dot", "graph.txt"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn net_summary_carries_the_certificate() {
    let s = summary(&hilbert(&["--shape", "hexagon", "net", "--radius", "2"]));
    assert_eq!(s["passed"], true);
    assert!(s["certificate"]["min_separation"].as_f64().unwrap() >= 0.5);
}

#[test]
fn growth_folner_and_rayleigh_on_the_triangle() {
    let s = summary(&hilbert(&["growth", "--radii", "4,6,8,10,12"]));
    assert_eq!(s["classification"], "polynomial");
    let f = summary(&hilbert(&["folner", "--radii", "2,4"]));
    let r = f["ratios"].as_array().unwrap();
    // the triangle's balls have measure πR² and perimeter 6R
    assert!((r[0].as_f64().unwrap() - 3.0 / std::f64::consts::PI).abs() < 1e-3);
    let l = summary(&hilbert(&["rayleigh", "--eps-grid=-0.5,0", "--radii", "8"]));
    assert!(l["lambda_estimate"].as_f64().unwrap() < 0.2);
}

#[test]
fn spectrum_rows_and_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = summary(&hilbert(&["--out", out, "spectrum", "--radii", "2,3"]));
    let rows = s["rows"].as_array().unwrap();
    assert!(rows[0]["rho"].as_f64().unwrap() < rows[1]["rho"].as_f64().unwrap());
    assert!(read(dir.path(), "spectrum.csv").lines().nth(1).unwrap().starts_with("radius,interior,rho"));
    error(&hilbert(&["--tol", "0", "spectrum"]), 1);
}

#[test]
fn selftest_runs_selected_criteria() {
    let s = summary(&hilbert(&["selftest", "--only", "1,9"]));
    assert_eq!(s["run"], 2);
    assert_eq!(s["passed"], 2);
}
