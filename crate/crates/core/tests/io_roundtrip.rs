use std::fs;

use coarsenkit::datagen::{generate_graph, sample_gmrf_features, GraphModel};
use coarsenkit::io::{
    format_float, load_graph, read_edges, read_labels, read_matrix_csv, read_metrics, write_edges,
    write_labels, write_matrix_csv, write_report, MetricsFile, Report,
};
use coarsenkit::metrics::{metric_report, spectrum};
use coarsenkit::{fgc_solve, Error, SolverConfig};

fn graph() -> coarsenkit::GraphData {
    let g = generate_graph(&GraphModel::ErdosRenyi { p: 20, prob: 0.3 }, (0.1, 3.0), 1).unwrap();
    let x = sample_gmrf_features(g.laplacian(), 4, 1).unwrap();
    g.with_features(Some(x)).unwrap()
}

#[test]
fn floats_keep_seventeen_digits() {
    for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
        let s = format_float(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{s}");
    }
}

#[test]
fn graph_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let g = graph();
    let (edges, features) = (dir.path().join("g.txt"), dir.path().join("x.csv"));
    write_edges(&g, &edges).unwrap();
    write_matrix_csv(g.features().unwrap(), &features).unwrap();
    let back = load_graph(&edges, Some(&features)).unwrap();
    assert_eq!(back.laplacian().edges(), g.laplacian().edges());
    assert_eq!(back.features(), g.features());
    assert_eq!(read_matrix_csv(&features).unwrap(), g.features().unwrap().clone());
}

#[test]
fn edge_parser_merges_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.txt");
    fs::write(&path, "# toy\n0 1 2.0\n1 0 3.0\n1 2 1.5  # trailing\n\n").unwrap();
    let (p, edges) = read_edges(&path).unwrap();
    assert_eq!(p, 3);
    assert_eq!(edges, vec![(0, 1, 3.0), (1, 2, 1.5)]);
    for bad in ["0 1\n", "0 0 1.0\n", "0 1 -1\n", "0 x 1\n", "0 2 1.0\n"] {
        fs::write(&path, bad).unwrap();
        assert!(matches!(read_edges(&path), Err(Error::Parse { .. })), "accepted {bad:?}");
    }
    fs::write(&path, "0 1 1\n2 3 1\n").unwrap();
    assert!(matches!(load_graph(&path, None), Err(Error::Disconnected { components: 2 })));
}

#[test]
fn labels_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.csv");
    write_labels(&[0, 2, 1, 1], ["node", "label"], &path).unwrap();
    assert_eq!(read_labels(&path).unwrap(), vec![0, 2, 1, 1]);
    fs::write(&path, "1\n0\n1\n").unwrap();
    assert_eq!(read_labels(&path).unwrap(), vec![1, 0, 1]);
}

#[test]
fn report_set_is_written_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let g = graph();
    let config = SolverConfig { gamma: 100.0, alpha: 10.0, lambda: 1.0, ratio: 0.5, seed: 3, ..SolverConfig::default() };
    let result = fgc_solve(&g, &config).unwrap();
    let coarse = &result.coarsened;
    let m = 100.min(coarse.k() - 1);
    let metrics = MetricsFile::new("fgc", &g, coarse.k(), metric_report(&g, coarse, m).unwrap(), &config, &result.trace);
    let ctc = result.relaxed_loading.t().dot(&result.relaxed_loading);
    let original = spectrum(g.laplacian(), m).unwrap();
    let reduced = spectrum(coarse.laplacian(), m).unwrap();
    let report = Report {
        metrics: &metrics,
        trace: &result.trace,
        spectrum_original: &original,
        spectrum_coarse: &reduced,
        ctc: &ctc,
        loading: coarse.loading(),
    };
    let files = write_report(&report, dir.path()).unwrap();
    assert_eq!(files.len(), 6);
    assert!(files.iter().all(|f| f.exists()));
    assert_eq!(read_metrics(&files[0]).unwrap(), metrics);
    let assignment = read_labels(&dir.path().join("assignment.csv")).unwrap();
    assert_eq!(assignment, coarse.loading().assignment().unwrap());
    let loss = fs::read_to_string(dir.path().join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), result.trace.objective.len() + 1);

    let again = dir.path().join("again");
    write_report(&report, &again).unwrap();
    assert_eq!(fs::read(&files[0]).unwrap(), fs::read(again.join("metrics.json")).unwrap());
}
