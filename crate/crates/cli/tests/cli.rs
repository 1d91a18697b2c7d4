use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coarsenkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarsenkit")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_json(output: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {stderr}"))
}

fn generate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["generate", "--out", path(dir), "--seed", "3"];
    args.extend_from_slice(extra);
    coarsenkit(&args)
}

#[test]
fn generated_dataset_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), &["--model", "er", "--p", "200", "--prob", "0.1", "--gmrf-dim", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = coarsenkit::io::load_graph(&dir.path().join("edges.txt"), Some(&dir.path().join("features.csv"))).unwrap();
    assert_eq!(g.p(), 200);
    assert_eq!(g.features().unwrap().ncols(), 20);
}

#[test]
fn perturbation_adds_ten_percent() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean");
    let dirty = dir.path().join("dirty");
    let base = ["--model", "ba", "--p", "80", "--m-attach", "2"];
    assert!(generate(&clean, &base).status.success());
    let mut perturbed = base.to_vec();
    perturbed.extend(["--perturb", "0.1"]);
    assert!(generate(&dirty, &perturbed).status.success());
    let count = |d: &Path| fs::read_to_string(d.join("edges.txt")).unwrap().lines().count();
    let m = count(&clean);
    assert_eq!(count(&dirty), m + (0.1 * m as f64).round() as usize);
}

#[test]
fn ring_lattice_without_rewiring() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), &["--model", "ws", "--p", "10", "--kring", "4", "--rewire", "0"]);
    assert!(out.status.success());
    let (p, edges) = coarsenkit::io::read_edges(&dir.path().join("edges.txt")).unwrap();
    assert_eq!((p, edges.len()), (10, 20));
    for &(i, j, _) in &edges {
        let gap = (j + 10 - i) % 10;
        assert!(gap == 1 || gap == 2 || gap == 8 || gap == 9, "edge ({i}, {j})");
    }
}

fn coarsen(dir: &Path, algo: &str, extra: &[&str]) -> Output {
    let out = dir.join(format!("run_{algo}"));
    let edges = dir.join("edges.txt");
    let features = dir.join("features.csv");
    let mut args = vec![
        "coarsen", "--algo", algo, "--edges", path(&edges), "--features", path(&features), "--ratio", "0.5",
        "--gamma", "100", "--alpha", "10", "--lambda", "1", "--seed", "1", "--out", path(&out),
    ];
    args.extend_from_slice(extra);
    coarsenkit(&args)
}

#[test]
fn coarsen_writes_report_for_every_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), &["--model", "er", "--p", "40", "--prob", "0.2", "--gmrf-dim", "6"]).status.success());
    for algo in ["fgc", "gc", "two-stage", "fgcr"] {
        let out = coarsen(dir.path(), algo, &["--reduction-ratio", "0.5"]);
        assert!(out.status.success(), "{algo}: {}", String::from_utf8_lossy(&out.stderr));
        let run = dir.path().join(format!("run_{algo}"));
        for file in ["metrics.json", "spectrum_original.csv", "spectrum_coarse.csv", "loss.csv", "ctc_heatmap.csv", "assignment.csv"] {
            assert!(run.join(file).exists(), "{algo}: missing {file}");
        }
        let metrics = coarsenkit::io::read_metrics(&run.join("metrics.json")).unwrap();
        assert_eq!(metrics.k, 20);
        assert_eq!(metrics.metrics.m_used, 19);
        let rows = fs::read_to_string(run.join("assignment.csv")).unwrap().lines().count();
        assert_eq!(rows, 41);
        let warned = String::from_utf8_lossy(&out.stderr).contains("warning");
        assert_eq!(warned, algo == "gc", "{algo}: unexpected warning state");
    }
}

#[test]
fn identical_runs_give_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), &["--model", "rgg", "--p", "30", "--radius", "0.4", "--gmrf-dim", "4"]).status.success());
    let first = coarsen(dir.path(), "fgc", &[]);
    assert!(first.status.success());
    let a = fs::read(dir.path().join("run_fgc/metrics.json")).unwrap();
    let second = coarsen(dir.path(), "fgc", &[]);
    assert!(second.status.success());
    let b = fs::read(dir.path().join("run_fgc/metrics.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_ratio_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), &["--model", "er", "--p", "20", "--prob", "0.3", "--gmrf-dim", "2"]).status.success());
    let out = coarsen(dir.path(), "fgc", &["--ratio", "1.0"]);
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "invalid_argument");
}

#[test]
fn module_errors_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    fs::write(&edges, "0 1 1\n2 3 1\n").unwrap();
    let out = coarsenkit(&["coarsen", "--algo", "gc", "--edges", path(&edges), "--ratio", "0.5", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert_eq!(err["error"], "disconnected");
    assert!(err["message"].as_str().unwrap().contains('2'));
    let out = coarsenkit(&["coarsen", "--algo", "fgc", "--edges", path(&dir.path().join("absent.txt")), "--ratio", "0.5", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "io");
}

#[test]
fn clustering_karate_club() {
    let dir = tempfile::tempdir().unwrap();
    let out = coarsenkit(&["cluster", "--dataset", "karate", "--classes", "2", "--seed", "2", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cluster.json")).unwrap()).unwrap();
    assert!(summary["misclassified"].as_u64().unwrap() <= 3, "{summary}");
    let rows = fs::read_to_string(dir.path().join("assignment.csv")).unwrap().lines().count();
    assert_eq!(rows, 35);
}

#[test]
fn clustering_planted_blocks_with_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = generate(&data, &["--model", "planted", "--sizes", "10,10", "--p-in", "0.7", "--p-out", "0.05", "--weight-hi", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = coarsenkit(&[
        "cluster", "--edges", path(&data.join("edges.txt")), "--labels", path(&data.join("labels.csv")),
        "--classes", "2", "--seed", "3", "--out", path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!(summary["misclassified"], 0);
}

#[test]
fn clustering_rejects_too_many_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = coarsenkit(&["cluster", "--dataset", "karate", "--classes", "34", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "invalid_parameter");
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_coarsenkit"))
        .args(["generate", "--model", "er", "--p", "10", "--prob", "0.5", "--out", path(dir.path())])
        .env("COARSENKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_coarsenkit"))
        .args(["generate", "--model", "er", "--p", "10", "--prob", "0.5", "--out", path(dir.path())])
        .env("COARSENKIT_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
}
