//! Featureless coarsening and the two-stage pipeline that smooths features afterwards.

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{coarsen_features, coarsen_laplacian, round_loading, CoarsenedGraph, GraphData};
use crate::linalg::Spd;
use crate::solver::{
    projected_residual, random_loading, repair_zero_rows, run_c_steps, small_change, CObjective,
    SolverConfig, SolverTrace, INITIAL_LIPSCHITZ,
};

/// Output of [`gc_solve`] and [`two_stage_solve`].
#[derive(Debug, Clone)]
pub struct GcResult {
    pub coarsened: CoarsenedGraph,
    pub trace: SolverTrace,
    /// Final relaxed loading matrix before rounding.
    pub relaxed_loading: Array2<f64>,
}

/// Projected-gradient minimization of `−γ logdet(CᵀΘC+J) + (λ/2)‖C1‖²`, followed by rounding.
///
/// Node features, if present, are ignored.
pub fn gc_solve(graph: &GraphData, config: &SolverConfig) -> Result<GcResult> {
    let start = Instant::now();
    config.validate()?;
    let p = graph.p();
    let k = config.supernode_count(p)?;
    let theta = graph.laplacian();
    let problem = config.problem(theta, None);
    let objective = CObjective::gc(&problem);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut c = random_loading(p, k, &mut rng)?;
    let mut state = objective.evaluate(&c)?;
    let mut trace = SolverTrace::default();
    trace.objective.push(state.value);
    trace.grad_norm.push(projected_residual(&c, &objective.gradient(&c, &state)?));
    let mut restarted = vec![false; p];
    let mut l_memory = INITIAL_LIPSCHITZ;

    for outer in 1..=config.outer_iters {
        let previous = state.value;
        (c, state) = run_c_steps(&objective, c, state, config, &mut l_memory, &mut trace.step_fallbacks)?;
        if repair_zero_rows(&mut c, &mut restarted, &mut rng)? {
            trace.restarts.push(outer);
            state = objective.evaluate(&c)?;
        }
        trace.objective.push(state.value);
        trace.grad_norm.push(projected_residual(&c, &objective.gradient(&c, &state)?));
        if !trace.restarts.contains(&outer) && small_change(previous, state.value, config.tol) {
            trace.converged = true;
            break;
        }
    }

    let rounded = round_loading(c.view())?;
    trace.dropped_columns = rounded.dropped_columns;
    let theta_c = coarsen_laplacian(theta, &rounded.loading)?;
    let coarsened = CoarsenedGraph::new(theta_c, rounded.loading)?;
    trace.wall_time = start.elapsed().as_secs_f64();
    Ok(GcResult { coarsened, trace, relaxed_loading: c })
}

/// `(Θ_c + I)⁻¹X̃`, the minimizer of `‖X_c − X̃‖² + tr(X_cᵀΘ_cX_c)`.
pub fn smooth_features(theta_c: &Array2<f64>, x_tilde: ArrayView2<f64>) -> Result<Array2<f64>> {
    let k = theta_c.nrows();
    if theta_c.ncols() != k || x_tilde.nrows() != k {
        return Err(Error::DimensionMismatch(format!(
            "coarse Laplacian {:?} and features {:?} disagree",
            theta_c.dim(),
            x_tilde.dim()
        )));
    }
    let system = theta_c + &Array2::<f64>::eye(k);
    Spd::factor(&system)?.solve(&x_tilde.to_owned())
}

/// Featureless coarsening, then mean aggregation `X̃ = PX` and feature smoothing.
pub fn two_stage_solve(graph: &GraphData, config: &SolverConfig) -> Result<GcResult> {
    let x = graph.require_features("the two-stage pipeline")?;
    let mut result = gc_solve(graph, config)?;
    let x_tilde = coarsen_features(x.view(), result.coarsened.loading())?;
    let x_c = smooth_features(result.coarsened.laplacian(), x_tilde.view())?;
    result.coarsened = result.coarsened.with_features(x_c)?;
    Ok(result)
}
