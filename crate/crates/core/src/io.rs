//! Edge-list and feature ingestion, and persistence of run reports.
//!
//! Edge files hold `src dst weight` lines with 0-indexed nodes; `#` starts a comment.
//! Feature files are headerless CSV with row `i` holding node `i`'s features.
//! Every float is written with 17 significant digits.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphData, LoadingMatrix};
use crate::metrics::MetricReport;
use crate::solver::{SolverConfig, SolverTrace};

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

struct PreciseFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17-significant-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        PreciseFormatter(serde_json::ser::PrettyFormatter::new()),
    );
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

/// Weighted `(src, dst, weight)` triples.
pub type EdgeList = Vec<(usize, usize, f64)>;

/// Reads an edge list, merging duplicate and reversed entries by maximum weight.
/// Returns the node count (largest index plus one) and the edges.
pub fn read_edges(path: &Path) -> Result<(usize, EdgeList)> {
    let reader = BufReader::new(File::open(path)?);
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut max_node = None::<usize>;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(path, line_no, format!("expected `src dst weight`, got {} fields", fields.len())));
        }
        let node = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_error(path, line_no, format!("invalid node index `{s}`")))
        };
        let (src, dst) = (node(fields[0])?, node(fields[1])?);
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| parse_error(path, line_no, format!("invalid weight `{}`", fields[2])))?;
        if !(weight.is_finite() && weight > 0.0) {
            return Err(parse_error(path, line_no, format!("weight must be positive, got {weight}")));
        }
        if src == dst {
            return Err(parse_error(path, line_no, format!("self-loop at node {src}")));
        }
        let key = (src.min(dst), src.max(dst));
        let entry = merged.entry(key).or_insert(weight);
        *entry = entry.max(weight);
        max_node = Some(max_node.map_or(key.1, |m: usize| m.max(key.1)));
    }
    let p = max_node.map_or(0, |m| m + 1);
    let mut seen = vec![false; p];
    for &(i, j) in merged.keys() {
        seen[i] = true;
        seen[j] = true;
    }
    if let Some(gap) = seen.iter().position(|&s| !s) {
        return Err(parse_error(path, 0, format!("node index gap: node {gap} has no edges")));
    }
    Ok((p, merged.into_iter().map(|((i, j), w)| (i, j, w)).collect()))
}

/// Reads a headerless numeric CSV into a dense matrix.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx + 1;
        if cols.is_some_and(|c| c != record.len()) {
            return Err(parse_error(path, line, "inconsistent column count"));
        }
        cols = Some(record.len());
        for field in record.iter() {
            data.push(field.parse::<f64>().map_err(|_| parse_error(path, line, format!("invalid number `{field}`")))?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), data)
        .map_err(|e| parse_error(path, 0, e.to_string()))
}

/// Loads a graph and, if given, its feature matrix.
pub fn load_graph(edge_path: &Path, feature_path: Option<&Path>) -> Result<GraphData> {
    let (p, edges) = read_edges(edge_path)?;
    let features = match feature_path {
        Some(fp) => {
            let x = read_matrix_csv(fp)?;
            if x.nrows() != p {
                return Err(Error::DimensionMismatch(format!(
                    "feature file has {} rows, edge file has {p} nodes",
                    x.nrows()
                )));
            }
            Some(x)
        }
        None => None,
    };
    let name = edge_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    GraphData::from_edges(name, p, &edges, features)
}

/// Writes the graph's edges as `src dst weight` lines.
pub fn write_edges(graph: &GraphData, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (i, j, w) in graph.laplacian().edges() {
        out.push_str(&format!("{i} {j} {}\n", format_float(w)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a dense matrix as headerless CSV.
pub fn write_matrix_csv(matrix: &Array2<f64>, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in matrix.rows() {
        writer.write_record(row.iter().map(|&v| format_float(v)))?;
    }
    writer.flush()?;
    Ok(())
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub algo: String,
    pub graph: String,
    pub p: usize,
    pub k: usize,
    pub seed: u64,
    pub metrics: MetricReport,
    /// Natural log of the reconstruction error, absent when the error is zero.
    pub log_re: Option<f64>,
    pub config: SolverConfig,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: Vec<usize>,
    pub dropped_columns: Vec<usize>,
    /// Dirichlet energy of the relaxed iterate, when the solver tracks it.
    pub de_relaxed: Option<f64>,
}

impl MetricsFile {
    /// Assembles the file contents; iterations and flags come from the trace.
    pub fn new(
        algo: &str,
        graph: &GraphData,
        k: usize,
        metrics: MetricReport,
        config: &SolverConfig,
        trace: &SolverTrace,
    ) -> Self {
        Self {
            algo: algo.to_string(),
            graph: graph.name().to_string(),
            p: graph.p(),
            k,
            seed: config.seed,
            log_re: (metrics.re > 0.0).then(|| metrics.re.ln()),
            metrics,
            config: config.clone(),
            iterations: trace.objective.len().saturating_sub(1),
            converged: trace.converged,
            restarts: trace.restarts.clone(),
            dropped_columns: trace.dropped_columns.clone(),
            de_relaxed: trace.de_relaxed,
        }
    }
}

/// Everything [`write_report`] persists.
pub struct Report<'a> {
    pub metrics: &'a MetricsFile,
    pub trace: &'a SolverTrace,
    pub spectrum_original: &'a [f64],
    pub spectrum_coarse: &'a [f64],
    /// `CᵀC` for the heatmap, usually from the relaxed loading matrix.
    pub ctc: &'a Array2<f64>,
    pub loading: &'a LoadingMatrix,
}

fn write_indexed(path: &Path, header: [&str; 2], values: &[f64]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for (i, &v) in values.iter().enumerate() {
        writer.write_record([i.to_string(), format_float(v)])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `metrics.json`, the spectra, loss curve, `CᵀC` heatmap and assignment into `out_dir`.
pub fn write_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let path = |name: &str| out_dir.join(name);
    let files = [
        "metrics.json",
        "spectrum_original.csv",
        "spectrum_coarse.csv",
        "loss.csv",
        "ctc_heatmap.csv",
        "assignment.csv",
    ];
    fs::write(path(files[0]), to_json_string(report.metrics)?)?;
    write_indexed(&path(files[1]), ["index", "eigenvalue"], report.spectrum_original)?;
    write_indexed(&path(files[2]), ["index", "eigenvalue"], report.spectrum_coarse)?;
    write_indexed(&path(files[3]), ["iter", "objective"], &report.trace.objective)?;
    write_matrix_csv(report.ctc, &path(files[4]))?;
    write_assignment(report.loading, &path(files[5]))?;
    Ok(files.iter().map(|f| path(f)).collect())
}

/// Writes `node,supernode` rows for a binary loading matrix.
pub fn write_assignment(loading: &LoadingMatrix, path: &Path) -> Result<()> {
    let assignment = loading
        .assignment()
        .ok_or_else(|| Error::InvalidLoading("assignment requires a binary loading matrix".into()))?;
    write_labels(assignment, ["node", "supernode"], path)
}

/// Writes `node,<label>` rows.
pub fn write_labels(labels: &[usize], header: [&str; 2], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for (i, &j) in labels.iter().enumerate() {
        writer.write_record([i.to_string(), j.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads labels from `node,label` CSV (with header) or one label per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.rsplit([',', ' ', '\t']).next().unwrap_or(line).trim();
        match last.parse::<usize>() {
            Ok(v) => labels.push(v),
            Err(_) if idx == 0 => continue,
            Err(_) => return Err(parse_error(path, idx + 1, format!("invalid label `{last}`"))),
        }
    }
    Ok(labels)
}

/// Reads `metrics.json`.
pub fn read_metrics(path: &Path) -> Result<MetricsFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
