use std::path::Path;
use std::process::{Command, Output};

use hermitia::metric::{format_torus_metric, MetricField, MetricKind};
use num_complex::Complex64;
use serde_json::Value;

fn hermitia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hermitia")).args(args).output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = hermitia(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn cx(v: &Value) -> Complex64 {
    Complex64::new(v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap())
}

fn write_kahler_file(dir: &Path) -> String {
    let field = MetricField::kahler_torus(
        2,
        &[(vec![1, 0, 0, 1], Complex64::new(0.004, 0.002)), (vec![0, 1, -1, 0], Complex64::new(-0.003, 0.001))],
    )
    .unwrap();
    let MetricKind::TorusFourier(terms) = field.kind() else { panic!("torus metric expected") };
    let path = dir.join("kahler.txt");
    std::fs::write(&path, format_torus_metric(2, terms)).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn hopf_second_chern_ricci_at_unit_point() {
    let r = json_of(&["curvature", "--metric", "hopf", "--dim", "2", "--point", "1,0,0,0", "--connection", "chern", "--what", "ricci2"]);
    assert_eq!(r["tool"], "hermitia");
    assert_eq!(r["seed"], 0);
    let m = &r["result"]["points"][0]["chern-second"];
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((cx(&m[i][j]) - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn flat_curvature_vanishes() {
    let out = hermitia(&["curvature", "--metric", "flat", "--dim", "3", "--point", "0,0,0,0,0,0", "--what", "all", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.0, "{line}");
        assert_eq!(f[4].parse::<f64>().unwrap(), 0.0, "{line}");
        rows += 1;
    }
    assert!(rows > 81);
}

#[test]
fn sampled_scalars_replay_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_kahler_file(dir.path());
    let args = ["curvature", "--metric-file", &file, "--sample", "20", "--seed", "7", "--what", "scalars"];
    let a = json_of(&args);
    let b = json_of(&args);
    assert_eq!(a["result"]["points"].as_array().unwrap().len(), 20);
    assert_eq!(a, b);
    let c = json_of(&["curvature", "--metric-file", &file, "--sample", "20", "--seed", "8", "--what", "scalars"]);
    assert_ne!(a["result"], c["result"]);
}

#[test]
fn structure_verdicts() {
    let h2 = json_of(&["check", "--metric", "hopf", "--dim", "2", "--sample", "50"]);
    let r = &h2["result"];
    assert_eq!((r["skt"].as_bool(), r["balanced"].as_bool(), r["kahler"].as_bool()), (Some(true), Some(false), Some(false)));
    assert_eq!(r["hopf_checklist"]["passes"], true);
    assert!(r["disclaimer"].as_str().unwrap().contains("no cohomology"));

    let h3 = json_of(&["check", "--metric", "hopf", "--dim", "3", "--sample", "50"]);
    assert_eq!(h3["result"]["skt"], false);
    assert_eq!(h3["result"]["hopf_checklist"]["passes"], true);
    assert_eq!(h3["result"]["positivity"]["bismut-first"][1]["verdict"], "negative");

    let flat = json_of(&["check", "--metric", "flat", "--dim", "2"]);
    for key in ["kahler", "balanced", "skt"] {
        assert_eq!(flat["result"][key], true);
    }
}

#[test]
fn verification_suites() {
    let a = json_of(&["verify", "--suite", "appendix", "--metric", "hopf", "--dim", "2", "--trials", "20", "--tol", "1e-9"]);
    assert_eq!(a["passed"], true);
    assert!(a["result"]["max_residual"].as_f64().unwrap() < 1e-9);

    let o = json_of(&["verify", "--suite", "hopf-oracle", "--dim", "3", "--points", "50"]);
    assert_eq!(o["passed"], true);
    assert_eq!(o["result"]["bismut_ricci"]["matched"], "corrected");
    assert!(o["result"]["residuals"].as_array().unwrap().len() >= 10);

    let f = json_of(&["verify", "--suite", "appendix", "--metric", "flat", "--dim", "2"]);
    assert_eq!(f["passed"], true);
}

#[test]
fn failed_verification_exits_with_one() {
    let out = hermitia(&["verify", "--suite", "appendix", "--metric", "hopf", "--dim", "2", "--trials", "2", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], false);
}

#[test]
fn hopf_reduction_fixed_point() {
    let out = hermitia(&["flow", "--hopf-ode", "--dim", "2", "--mu", "0.25", "--c0", "1", "--T", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let f: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!((f[1], f[2]), (1.0, 0.0));
    }
    let linear = json_of(&["flow", "--hopf-ode", "--dim", "2", "--mu", "0", "--T", "1", "--format", "json"]);
    assert!((linear["result"]["final_c"].as_f64().unwrap() - 0.75).abs() < 1e-15);
}

#[test]
fn flat_grid_flow_grows_exponentially() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("grid.csv");
    let fit = dir.path().join("fit.txt");
    let r = json_of(&[
        "flow", "--metric", "flat", "--dim", "1", "--grid", "8", "--mu", "0.1", "--T", "0.1", "--format", "json",
        "--dump", dump.to_str().unwrap(), "--fit", fit.to_str().unwrap(),
    ]);
    let m = &r["result"]["final_metric_at_origin"];
    let want = 0.01f64.exp();
    assert!((cx(&m[0][0]).re - want).abs() / want <= 1e-8);
    let state = hermitia::flow::parse_grid_csv(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!((state.n, state.grid), (1, 8));
    assert!((state.t - 0.1).abs() < 1e-15);
    let again = json_of(&["curvature", "--metric-file", fit.to_str().unwrap(), "--point", "0.3,0.7", "--what", "ricci2"]);
    assert!(cx(&again["result"]["points"][0]["chern-second"][0][0]).norm() < 1e-12);
}

#[test]
fn kahler_grid_flow_keeps_the_defect_small() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_kahler_file(dir.path());
    let r = json_of(&["flow", "--metric-file", &file, "--grid", "12", "--mu", "0", "--T", "0.01", "--format", "json"]);
    assert!(r["result"]["max_kahler_defect"].as_f64().unwrap() <= 1e-6);
    assert!((r["result"]["t"].as_f64().unwrap() - 0.01).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    assert_eq!(hermitia(&["curvature", "--dim", "2"]).status.code(), Some(2));
    assert_eq!(hermitia(&["curvature", "--metric", "flat", "--dim", "2", "--point", "1,2,3"]).status.code(), Some(2));
    assert_eq!(hermitia(&["curvature", "--metric-file", "/nonexistent/metric.txt"]).status.code(), Some(2));
    assert_eq!(hermitia(&["curvature", "--metric", "hopf", "--dim", "2", "--point", "0,0,0,0"]).status.code(), Some(3));
    assert_eq!(hermitia(&["flow", "--metric", "hopf", "--dim", "2", "--grid", "8"]).status.code(), Some(3));
    assert_eq!(hermitia(&["flow", "--hopf-ode", "--c0=-1"]).status.code(), Some(3));
    assert_eq!(hermitia(&["nonsense"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_hermitia"))
        .args(["curvature", "--metric", "flat", "--point", "0,0,0,0", "--what", "scalars"])
        .env("HERMITIA_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_hermitia"))
        .args(["curvature", "--metric", "flat", "--point", "0,0,0,0", "--what", "scalars"])
        .env("HERMITIA_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
