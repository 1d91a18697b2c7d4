//! Python module `coarsenkit`: graphs, synthetic data, coarsening solvers, metrics and clustering.
//!
//! Matrices cross the boundary as lists of rows.

use coarsenkit::cluster::{self as clustering, cluster_config, KARATE_LABELS};
use coarsenkit::datagen::{self, GraphModel};
use coarsenkit::metrics::{metric_report, MetricReport};
use coarsenkit::presets::find_preset;
use coarsenkit::{
    fgc_solve, fgcr_solve, gc_solve, io, two_stage_solve, CoarsenedGraph, GraphData, Laplacian, Projection,
    SolverConfig, SolverTrace, StepRule,
};
use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(coarsenkit, CoarsenError, PyException, "Error raised by the coarsening library.");

fn to_py(e: coarsenkit::Error) -> PyErr {
    CoarsenError::new_err(format!("{}: {e}", e.kind()))
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Connected undirected weighted graph with optional node features.
#[pyclass(name = "Graph", module = "coarsenkit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: GraphData,
}

#[pymethods]
impl PyGraph {
    /// Builds a graph from `(src, dst, weight)` triples on nodes `0..p`.
    #[new]
    #[pyo3(signature = (p, edges, features=None, name="graph"))]
    fn new(p: usize, edges: Vec<(usize, usize, f64)>, features: Option<Vec<Vec<f64>>>, name: &str) -> PyResult<Self> {
        let features = features.map(from_rows).transpose()?;
        let inner = GraphData::new(name, Laplacian::from_edges(p, &edges).map_err(to_py)?, features).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Reads an edge list and an optional headerless feature CSV.
    #[staticmethod]
    #[pyo3(signature = (edges_path, features_path=None))]
    fn load(edges_path: std::path::PathBuf, features_path: Option<std::path::PathBuf>) -> PyResult<Self> {
        let inner = io::load_graph(&edges_path, features_path.as_deref()).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Writes the edge list and, when present, the feature CSV.
    #[pyo3(signature = (edges_path, features_path=None))]
    fn save(&self, edges_path: std::path::PathBuf, features_path: Option<std::path::PathBuf>) -> PyResult<()> {
        io::write_edges(&self.inner, &edges_path).map_err(to_py)?;
        if let (Some(path), Some(x)) = (features_path, self.inner.features()) {
            io::write_matrix_csv(x, &path).map_err(to_py)?;
        }
        Ok(())
    }

    /// Copy of the graph with new features (or none).
    #[pyo3(signature = (features=None))]
    fn with_features(&self, features: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let features = features.map(from_rows).transpose()?;
        Ok(Self { inner: self.inner.clone().with_features(features).map_err(to_py)? })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.laplacian().num_edges()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    /// `(src, dst, weight)` triples with `src < dst`.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.laplacian().edges()
    }

    /// Dense Laplacian.
    fn laplacian(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.laplacian().to_dense())
    }

    fn features(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.features().map(to_rows)
    }

    fn __repr__(&self) -> String {
        let n = self.inner.features().map_or(0, |x| x.ncols());
        format!("Graph(name={:?}, p={}, edges={}, features={n})", self.inner.name(), self.p(), self.num_edges())
    }
}

/// Quality measures of a coarsening.
#[pyclass(name = "Metrics", module = "coarsenkit", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyMetrics {
    ree: f64,
    de_original: f64,
    de_coarsened: f64,
    he: f64,
    re: f64,
    epsilon: f64,
    m_used: usize,
}

impl From<MetricReport> for PyMetrics {
    fn from(r: MetricReport) -> Self {
        Self {
            ree: r.ree,
            de_original: r.de_original,
            de_coarsened: r.de_coarsened,
            he: r.he,
            re: r.re,
            epsilon: r.epsilon,
            m_used: r.m_used,
        }
    }
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!(
            "Metrics(ree={:.6}, he={:.6}, re={:.6}, epsilon={:.6}, de_original={:.6}, de_coarsened={:.6}, m_used={})",
            self.ree, self.he, self.re, self.epsilon, self.de_original, self.de_coarsened, self.m_used
        )
    }
}

/// Outcome of a coarsening run.
#[pyclass(name = "Coarsening", module = "coarsenkit", frozen)]
struct PyCoarsening {
    coarsened: CoarsenedGraph,
    trace: SolverTrace,
    relaxed_loading: Array2<f64>,
    metrics: PyMetrics,
}

#[pymethods]
impl PyCoarsening {
    #[getter]
    fn k(&self) -> usize {
        self.coarsened.k()
    }

    /// Supernode of every original node.
    #[getter]
    fn assignment(&self) -> Vec<usize> {
        self.coarsened.loading().assignment().map(<[usize]>::to_vec).unwrap_or_default()
    }

    #[getter]
    fn metrics(&self) -> PyMetrics {
        self.metrics.clone()
    }

    /// Objective after every outer iteration, starting at the initial point.
    #[getter]
    fn objective(&self) -> Vec<f64> {
        self.trace.objective.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.trace.converged
    }

    /// Coarse Laplacian `CᵀΘC` of the rounded loading matrix.
    fn laplacian(&self) -> Vec<Vec<f64>> {
        to_rows(self.coarsened.laplacian())
    }

    /// Coarse features, when the solver produces them.
    fn features(&self) -> Option<Vec<Vec<f64>>> {
        self.coarsened.features().map(to_rows)
    }

    /// Relaxed loading matrix before rounding.
    fn relaxed_loading(&self) -> Vec<Vec<f64>> {
        to_rows(&self.relaxed_loading)
    }

    fn __repr__(&self) -> String {
        format!("Coarsening(k={}, iterations={}, converged={})", self.k(), self.trace.objective.len() - 1, self.converged())
    }
}

fn step_rule(name: &str) -> PyResult<StepRule> {
    match name {
        "analytic" => Ok(StepRule::AnalyticBound),
        "backtrack" => Ok(StepRule::Backtracking),
        "inv-k" => Ok(StepRule::FixedInverseK),
        other => Err(PyValueError::new_err(format!("unknown step rule `{other}`"))),
    }
}

fn projection(name: &str) -> PyResult<Projection> {
    match name {
        "euclidean" => Ok(Projection::Euclidean),
        "row-scaled" => Ok(Projection::RowScaled),
        other => Err(PyValueError::new_err(format!("unknown projection `{other}`"))),
    }
}

/// Coarsens `graph` with `algo` in {"fgc", "gc", "two-stage", "fgcr"}.
///
/// Unset weights come from `preset` when given, otherwise from the library defaults.
#[pyfunction]
#[pyo3(signature = (
    graph, algo="fgc", ratio=0.3, *, reduction_ratio=None, gamma=None, alpha=None, lambda_=None,
    outer=None, inner=None, tol=None, seed=0, step=None, projection=None, preset=None
))]
#[allow(clippy::too_many_arguments)]
fn coarsen(
    py: Python<'_>,
    graph: &PyGraph,
    algo: &str,
    ratio: f64,
    reduction_ratio: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    lambda_: Option<f64>,
    outer: Option<usize>,
    inner: Option<usize>,
    tol: Option<f64>,
    seed: u64,
    step: Option<&str>,
    projection: Option<&str>,
    preset: Option<&str>,
) -> PyResult<PyCoarsening> {
    let mut config = match preset {
        Some(name) => find_preset(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))?
            .config(ratio, seed),
        None => SolverConfig { ratio, seed, ..SolverConfig::default() },
    };
    config.reduction_ratio = reduction_ratio;
    config.gamma = gamma.unwrap_or(config.gamma);
    config.alpha = alpha.unwrap_or(config.alpha);
    config.lambda = lambda_.unwrap_or(config.lambda);
    config.outer_iters = outer.unwrap_or(config.outer_iters);
    config.inner_iters = inner.unwrap_or(config.inner_iters);
    config.tol = tol.unwrap_or(config.tol);
    if let Some(s) = step {
        config.step_rule = step_rule(s)?;
    }
    if let Some(p) = projection {
        config.projection = self::projection(p)?;
    }
    let g = &graph.inner;
    let run = || -> coarsenkit::Result<_> {
        Ok(match algo {
            "fgc" => fgc_solve(g, &config).map(|r| (r.coarsened, r.trace, r.relaxed_loading))?,
            "gc" => gc_solve(g, &config).map(|r| (r.coarsened, r.trace, r.relaxed_loading))?,
            "two-stage" => two_stage_solve(g, &config).map(|r| (r.coarsened, r.trace, r.relaxed_loading))?,
            "fgcr" => fgcr_solve(g, &config).map(|r| (r.coarsened, r.trace, r.relaxed_loading))?,
            other => return Err(coarsenkit::Error::InvalidParameter(format!("unknown algorithm `{other}`"))),
        })
    };
    let (coarsened, trace, relaxed_loading) = py.detach(run).map_err(to_py)?;
    let metrics = metric_report(g, &coarsened, 100).map_err(to_py)?.into();
    Ok(PyCoarsening { coarsened, trace, relaxed_loading, metrics })
}

/// Draws a connected random graph.
///
/// `model` is one of "er", "ba", "ws", "rgg" or "planted".
#[pyfunction]
#[pyo3(signature = (
    model, p=100, *, prob=0.1, m_attach=2, k_ring=4, rewire=0.1, radius=0.2, sizes=None,
    p_in=0.3, p_out=0.02, weight_range=(1.0, 10.0), seed=0
))]
#[allow(clippy::too_many_arguments)]
fn generate(
    model: &str,
    p: usize,
    prob: f64,
    m_attach: usize,
    k_ring: usize,
    rewire: f64,
    radius: f64,
    sizes: Option<Vec<usize>>,
    p_in: f64,
    p_out: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> PyResult<PyGraph> {
    let model = match model {
        "er" => GraphModel::ErdosRenyi { p, prob },
        "ba" => GraphModel::BarabasiAlbert { p, m_attach },
        "ws" => GraphModel::WattsStrogatz { p, k_ring, rewire_prob: rewire },
        "rgg" => GraphModel::RandomGeometric { p, radius },
        "planted" => GraphModel::PlantedPartition { sizes: sizes.unwrap_or_else(|| vec![p / 2, p - p / 2]), p_in, p_out },
        other => return Err(PyValueError::new_err(format!("unknown model `{other}`"))),
    };
    Ok(PyGraph { inner: datagen::generate_graph(&model, weight_range, seed).map_err(to_py)? })
}

/// `n` samples from `N(0, Θ†)` as a `p × n` list of rows.
#[pyfunction]
#[pyo3(signature = (graph, n, seed=0))]
fn sample_gmrf(graph: &PyGraph, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&datagen::sample_gmrf_features(graph.inner.laplacian(), n, seed).map_err(to_py)?))
}

/// Adds `round(rate · m)` random unit-weight edges.
#[pyfunction]
#[pyo3(signature = (graph, rate, seed=0))]
fn perturb(graph: &PyGraph, rate: f64, seed: u64) -> PyResult<PyGraph> {
    Ok(PyGraph { inner: datagen::perturb_edges(&graph.inner, rate, seed).map_err(to_py)? })
}

/// Metrics of a supernode assignment with `k` supernodes, using up to `m` eigenvalues.
#[pyfunction]
#[pyo3(signature = (graph, assignment, m=100))]
fn metrics(graph: &PyGraph, assignment: Vec<usize>, m: usize) -> PyResult<PyMetrics> {
    let k = assignment.iter().max().map_or(0, |&a| a + 1);
    let loading = coarsenkit::LoadingMatrix::from_assignment(&assignment, k).map_err(to_py)?;
    let theta_c = coarsenkit::graph::coarsen_laplacian(graph.inner.laplacian(), &loading).map_err(to_py)?;
    let coarse = CoarsenedGraph::new(theta_c, loading).map_err(to_py)?;
    Ok(metric_report(&graph.inner, &coarse, m).map_err(to_py)?.into())
}

/// Assigns nodes to `classes` groups; graphs without features get GMRF samples of dimension `gmrf_dim`.
#[pyfunction]
#[pyo3(signature = (graph, classes, seed=0, gmrf_dim=600))]
fn cluster(py: Python<'_>, graph: &PyGraph, classes: usize, seed: u64, gmrf_dim: usize) -> PyResult<Vec<usize>> {
    let mut g = graph.inner.clone();
    if g.features().is_none() {
        let x = datagen::sample_gmrf_features(g.laplacian(), gmrf_dim, seed).map_err(to_py)?;
        g = g.with_features(Some(x)).map_err(to_py)?;
    }
    py.detach(|| clustering::cluster(&g, classes, &cluster_config(seed))).map_err(to_py)
}

/// Misclassified nodes under the best matching of predicted to true labels.
#[pyfunction]
fn misclassified(predicted: Vec<usize>, truth: Vec<usize>) -> PyResult<usize> {
    clustering::misclassification_count(&predicted, &truth).map_err(to_py)
}

/// Zachary's karate club graph without features.
#[pyfunction]
fn karate_club() -> PyGraph {
    PyGraph { inner: clustering::karate_club() }
}

#[pymodule(name = "coarsenkit")]
fn coarsenkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PyCoarsening>()?;
    m.add("CoarsenError", m.py().get_type::<CoarsenError>())?;
    m.add("KARATE_LABELS", KARATE_LABELS.to_vec())?;
    m.add_function(wrap_pyfunction!(coarsen, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_gmrf, m)?)?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(misclassified, m)?)?;
    m.add_function(wrap_pyfunction!(karate_club, m)?)?;
    Ok(())
}
