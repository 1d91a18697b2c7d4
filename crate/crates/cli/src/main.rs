//! `coarsenkit` command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coarsenkit::cluster::{cluster, cluster_config, karate_club, misclassification_count, KARATE_LABELS};
use coarsenkit::datagen::{generate_graph, perturb_edges, planted_labels, sample_gmrf_features, GraphModel};
use coarsenkit::io::{
    load_graph, read_labels, to_json_string, write_edges, write_labels, write_matrix_csv, write_report,
    MetricsFile, Report,
};
use coarsenkit::metrics::{metric_report, spectrum};
use coarsenkit::presets::find_preset;
use coarsenkit::{
    fgc_solve, fgcr_solve, gc_solve, two_stage_solve, Error, GraphData, Projection, SolverConfig, StepRule,
};

/// Largest eigenvalue count compared by the relative eigen error.
const REE_EIGENVALUES: usize = 100;
/// Environment variable capping the BLAS thread count.
const THREADS_ENV: &str = "COARSENKIT_THREADS";

#[derive(Parser)]
#[command(name = "coarsenkit", version, about = "Graph coarsening with node features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coarsen a graph and write metrics, spectra, loss curve, CᵀC heatmap and assignment.
    Coarsen(CoarsenArgs),
    /// Generate a synthetic graph with optional GMRF features and edge perturbation.
    Generate(GenerateArgs),
    /// Cluster nodes by coarsening to one supernode per class.
    Cluster(ClusterArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Fgc,
    Gc,
    TwoStage,
    Fgcr,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepArg {
    Analytic,
    Backtrack,
    InvK,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectionArg {
    Euclidean,
    RowScaled,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Outer iterations.
    #[arg(long)]
    outer: Option<usize>,
    /// Inner loading-matrix steps per outer iteration.
    #[arg(long)]
    inner: Option<usize>,
    /// Relative objective change that stops the outer loop.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    step: Option<StepArg>,
    #[arg(long, value_enum)]
    projection: Option<ProjectionArg>,
}

impl SolverArgs {
    fn apply(&self, mut config: SolverConfig) -> SolverConfig {
        config.gamma = self.gamma.unwrap_or(config.gamma);
        config.alpha = self.alpha.unwrap_or(config.alpha);
        config.lambda = self.lambda.unwrap_or(config.lambda);
        config.outer_iters = self.outer.unwrap_or(config.outer_iters);
        config.inner_iters = self.inner.unwrap_or(config.inner_iters);
        config.tol = self.tol.unwrap_or(config.tol);
        config.seed = self.seed;
        if let Some(step) = self.step {
            config.step_rule = match step {
                StepArg::Analytic => StepRule::AnalyticBound,
                StepArg::Backtrack => StepRule::Backtracking,
                StepArg::InvK => StepRule::FixedInverseK,
            };
        }
        if let Some(projection) = self.projection {
            config.projection = match projection {
                ProjectionArg::Euclidean => Projection::Euclidean,
                ProjectionArg::RowScaled => Projection::RowScaled,
            };
        }
        config
    }
}

#[derive(Args)]
struct CoarsenArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Edge list with `src dst weight` lines.
    #[arg(long)]
    edges: PathBuf,
    /// Headerless CSV with one row per node.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Coarsening ratio k/p in (0, 1).
    #[arg(long, value_parser = open_unit_interval)]
    ratio: f64,
    /// Feature reduction ratio d/n in (0, 1] (FGCR only).
    #[arg(long)]
    reduction_ratio: Option<f64>,
    /// Dataset whose published weights serve as defaults.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Er,
    Ba,
    Ws,
    Rgg,
    Planted,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Node count (not used by the planted model).
    #[arg(long, default_value_t = 100)]
    p: usize,
    /// ER edge probability.
    #[arg(long, default_value_t = 0.1)]
    prob: f64,
    /// BA edges per new node.
    #[arg(long, default_value_t = 2)]
    m_attach: usize,
    /// WS ring degree.
    #[arg(long, default_value_t = 4)]
    kring: usize,
    /// WS rewiring probability.
    #[arg(long, default_value_t = 0.1)]
    rewire: f64,
    /// RGG connection radius.
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Planted block sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [50, 50])]
    sizes: Vec<usize>,
    /// Planted in-block edge probability.
    #[arg(long, default_value_t = 0.3)]
    p_in: f64,
    /// Planted cross-block edge probability.
    #[arg(long, default_value_t = 0.02)]
    p_out: f64,
    #[arg(long, default_value_t = 1.0)]
    weight_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    weight_hi: f64,
    /// Feature dimension of GMRF samples drawn from the unperturbed graph.
    #[arg(long)]
    gmrf_dim: Option<usize>,
    /// Fraction of extra random edges to add.
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Karate,
}

#[derive(Args)]
struct ClusterArgs {
    /// Class count C.
    #[arg(long)]
    classes: usize,
    /// Edge list; required unless `--dataset` is given.
    #[arg(long, required_unless_present = "dataset")]
    edges: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "edges")]
    dataset: Option<DatasetArg>,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Ground-truth labels as `node,label` CSV or one label per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Feature dimension of GMRF samples used when no features are given.
    #[arg(long, default_value_t = 600)]
    gmrf_dim: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

fn open_unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

#[derive(Debug)]
struct Failure {
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { kind: e.kind().to_string(), message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { kind: "invalid_argument".into(), message: message.into() }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { kind: "io".into(), message: format!("{}: {e}", path.display()) }
}

fn set_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: i32 = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| invalid(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    extern "C" {
        fn openblas_set_num_threads(num_threads: std::ffi::c_int);
    }
    unsafe { openblas_set_num_threads(threads) };
    Ok(())
}

fn run_coarsen(args: &CoarsenArgs) -> Result<(), Failure> {
    let graph = load_graph(&args.edges, args.features.as_deref())?;
    let mut config = SolverConfig { ratio: args.ratio, reduction_ratio: args.reduction_ratio, ..SolverConfig::default() };
    if let Some(name) = &args.preset {
        let preset = find_preset(name).ok_or_else(|| invalid(format!("unknown preset `{name}`")))?;
        config = SolverConfig { reduction_ratio: args.reduction_ratio, ..preset.config(args.ratio, 0) };
    }
    let config = args.solver.apply(config);
    config.validate()?;

    let (algo, coarsened, trace, relaxed) = match args.algo {
        Algo::Fgc => {
            let r = fgc_solve(&graph, &config)?;
            ("fgc", r.coarsened, r.trace, r.relaxed_loading)
        }
        Algo::Gc => {
            if graph.features().is_some() {
                eprintln!("warning: gc ignores features while solving; they are used only for metrics");
            }
            let r = gc_solve(&graph, &config)?;
            ("gc", r.coarsened, r.trace, r.relaxed_loading)
        }
        Algo::TwoStage => {
            let r = two_stage_solve(&graph, &config)?;
            ("two-stage", r.coarsened, r.trace, r.relaxed_loading)
        }
        Algo::Fgcr => {
            if config.reduction_ratio.is_none() {
                return Err(invalid("fgcr requires --reduction-ratio"));
            }
            let r = fgcr_solve(&graph, &config)?;
            ("fgcr", r.coarsened, r.trace, r.relaxed_loading)
        }
    };
    let report = metric_report(&graph, &coarsened, REE_EIGENVALUES)?;
    let m = report.m_used;
    let metrics = MetricsFile::new(algo, &graph, coarsened.k(), report, &config, &trace);
    let ctc = relaxed.t().dot(&relaxed);
    let original = spectrum(graph.laplacian(), m)?;
    let coarse = spectrum(coarsened.laplacian(), m)?;
    write_report(
        &Report {
            metrics: &metrics,
            trace: &trace,
            spectrum_original: &original,
            spectrum_coarse: &coarse,
            ctc: &ctc,
            loading: coarsened.loading(),
        },
        &args.out,
    )?;
    if let Some(features) = coarsened.features() {
        write_matrix_csv(features, &args.out.join("features_coarse.csv"))?;
    }
    println!("{}", to_json_string(&metrics.metrics)?);
    Ok(())
}

fn run_generate(args: &GenerateArgs) -> Result<(), Failure> {
    let model = match args.model {
        ModelArg::Er => GraphModel::ErdosRenyi { p: args.p, prob: args.prob },
        ModelArg::Ba => GraphModel::BarabasiAlbert { p: args.p, m_attach: args.m_attach },
        ModelArg::Ws => GraphModel::WattsStrogatz { p: args.p, k_ring: args.kring, rewire_prob: args.rewire },
        ModelArg::Rgg => GraphModel::RandomGeometric { p: args.p, radius: args.radius },
        ModelArg::Planted => GraphModel::PlantedPartition { sizes: args.sizes.clone(), p_in: args.p_in, p_out: args.p_out },
    };
    let mut graph = generate_graph(&model, (args.weight_lo, args.weight_hi), args.seed)?;
    if let Some(n) = args.gmrf_dim {
        let x = sample_gmrf_features(graph.laplacian(), n, args.seed)?;
        graph = graph.with_features(Some(x))?;
    }
    if let Some(rate) = args.perturb {
        graph = perturb_edges(&graph, rate, args.seed.wrapping_add(1))?;
    }
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    write_edges(&graph, &args.out.join("edges.txt"))?;
    if let Some(x) = graph.features() {
        write_matrix_csv(x, &args.out.join("features.csv"))?;
    }
    if let GraphModel::PlantedPartition { sizes, .. } = &model {
        write_labels(&planted_labels(sizes), ["node", "label"], &args.out.join("labels.csv"))?;
    }
    println!(
        "{}",
        serde_json::json!({ "p": graph.p(), "edges": graph.laplacian().num_edges(), "model": model })
    );
    Ok(())
}

fn run_cluster(args: &ClusterArgs) -> Result<(), Failure> {
    let (graph, default_labels) = match (&args.dataset, &args.edges) {
        (Some(DatasetArg::Karate), _) => (karate_club(), Some(KARATE_LABELS.to_vec())),
        (None, Some(edges)) => (load_graph(edges, args.features.as_deref())?, None),
        (None, None) => return Err(invalid("either --edges or --dataset is required")),
    };
    let graph: GraphData = match (graph.features(), args.features.as_ref(), &args.dataset) {
        (None, Some(path), Some(_)) => {
            let x = coarsenkit::io::read_matrix_csv(path)?;
            graph.with_features(Some(x))?
        }
        (None, None, _) => {
            let x = sample_gmrf_features(graph.laplacian(), args.gmrf_dim, args.solver.seed)?;
            graph.with_features(Some(x))?
        }
        _ => graph,
    };
    let config = args.solver.apply(cluster_config(args.solver.seed));
    let labels = cluster(&graph, args.classes, &config)?;
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    write_labels(&labels, ["node", "cluster"], &args.out.join("assignment.csv"))?;
    let truth = match &args.labels {
        Some(path) => Some(read_labels(path)?),
        None => default_labels,
    };
    let misclassified = match truth {
        Some(truth) => Some(misclassification_count(&labels, &truth)?),
        None => None,
    };
    let summary = serde_json::json!({
        "p": graph.p(),
        "classes": args.classes,
        "seed": args.solver.seed,
        "misclassified": misclassified,
    });
    fs::write(args.out.join("cluster.json"), format!("{summary:#}\n")).map_err(|e| io_failure(&args.out, e))?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = invalid(e.kind().to_string());
            let detail = e.render().to_string();
            eprintln!(
                "{}",
                serde_json::json!({ "error": failure.kind, "message": detail.trim() })
            );
            return ExitCode::from(2);
        }
    };
    let outcome = set_threads().and_then(|()| match &cli.command {
        Command::Coarsen(args) => run_coarsen(args),
        Command::Generate(args) => run_generate(args),
        Command::Cluster(args) => run_cluster(args),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", serde_json::json!({ "error": failure.kind, "message": failure.message }));
            ExitCode::FAILURE
        }
    }
}
