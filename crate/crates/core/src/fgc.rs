//! Joint learning of the loading matrix and coarse features.

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{coarsen_laplacian, congruence, round_loading, CoarsenedGraph, GraphData};
use crate::linalg::{frobenius_sq, inner, Spd};
use crate::metrics::epsilon_similarity;
use crate::solver::{
    grad_xtilde_fgc, projected_residual, random_loading, repair_zero_rows, run_c_steps,
    small_change, CObjective, CState, KktReport, Problem, SolverConfig, SolverTrace,
    INITIAL_LIPSCHITZ,
};

/// Output of [`fgc_solve`].
#[derive(Debug, Clone)]
pub struct FgcResult {
    /// Coarsened graph built from the rounded loading matrix.
    pub coarsened: CoarsenedGraph,
    pub trace: SolverTrace,
    /// ε-similarity of the rounded result.
    pub epsilon: f64,
    /// Stationarity residuals `(C, X̃)` of the final relaxed iterate.
    pub kkt_residuals: (f64, f64),
    /// Final relaxed loading matrix before rounding.
    pub relaxed_loading: Array2<f64>,
    /// Coarse features paired with the relaxed loading matrix.
    pub relaxed_features: Array2<f64>,
}

/// `X̃ = ((2/α)CᵀΘC + CᵀC)⁻¹CᵀX`, the exact minimizer over `X̃` for fixed `C`.
pub fn xtilde_closed_form(problem: &Problem, c: &Array2<f64>) -> Result<Array2<f64>> {
    let x = problem.x()?;
    let mut system = congruence(problem.theta, c.view()) * (2.0 / problem.alpha);
    system += &c.t().dot(c);
    let factor = Spd::factor(&system).map_err(|_| {
        Error::NotPositiveDefinite("coarse feature system is singular (empty supernode)".into())
    })?;
    factor.solve(&c.t().dot(&x))
}

/// One explicit gradient step `X̃ − η∇f(X̃)` on the coarse features.
pub fn fgc_xtilde_gradient_step(
    problem: &Problem,
    x_tilde: ArrayView2<f64>,
    c: &Array2<f64>,
    eta: f64,
) -> Result<Array2<f64>> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")));
    }
    let grad = grad_xtilde_fgc(problem, c, x_tilde)?;
    Ok(&x_tilde - &(grad * eta))
}

fn stationarity(
    problem: &Problem,
    objective: &CObjective,
    c: &Array2<f64>,
    state: &CState,
    x_tilde: &Array2<f64>,
) -> Result<KktReport> {
    let c_residual = projected_residual(c, &objective.gradient(c, state)?);
    let x_residual = frobenius_sq(grad_xtilde_fgc(problem, c, x_tilde.view())?.view()).sqrt();
    Ok(KktReport { c_residual, x_residual, satisfied: false })
}

fn relaxed_epsilon(de_original: f64, theta_c: &Array2<f64>, x_tilde: &Array2<f64>) -> f64 {
    let norm = de_original.max(0.0).sqrt();
    let norm_c = inner(x_tilde.view(), theta_c.dot(x_tilde).view()).max(0.0).sqrt();
    if norm > 0.0 {
        (norm - norm_c).abs() / norm
    } else {
        f64::NAN
    }
}

/// Alternates projected-gradient updates of `C` with closed-form updates of `X̃`,
/// then rounds `C` and recomputes `Θ_c` and `X̃` from the rounded matrix.
pub fn fgc_solve(graph: &GraphData, config: &SolverConfig) -> Result<FgcResult> {
    let start = Instant::now();
    config.validate()?;
    let x = graph.require_features("FGC")?;
    let p = graph.p();
    let k = config.supernode_count(p)?;
    let theta = graph.laplacian();
    let problem = config.problem(theta, Some(x.view()));
    let de_original = crate::metrics::dirichlet_energy(theta, x.view())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut c = random_loading(p, k, &mut rng)?;
    let mut x_tilde = xtilde_closed_form(&problem, &c)?;
    let mut objective = CObjective::fgc(&problem, x_tilde.view())?;
    let mut state = objective.evaluate(&c)?;

    let mut trace = SolverTrace { epsilon_track: Some(Vec::new()), ..Default::default() };
    let kkt = stationarity(&problem, &objective, &c, &state, &x_tilde)?;
    trace.objective.push(state.value);
    trace.grad_norm.push(kkt.c_residual.hypot(kkt.x_residual));
    let mut last_kkt = kkt;
    let mut restarted = vec![false; p];
    let mut l_memory = INITIAL_LIPSCHITZ;

    for outer in 1..=config.outer_iters {
        let previous = state.value;
        (c, state) = run_c_steps(&objective, c, state, config, &mut l_memory, &mut trace.step_fallbacks)?;
        if repair_zero_rows(&mut c, &mut restarted, &mut rng)? {
            trace.restarts.push(outer);
            state = objective.evaluate(&c)?;
        }
        let candidate = xtilde_closed_form(&problem, &c)?;
        let candidate_objective = CObjective::fgc(&problem, candidate.view())?;
        let candidate_state = candidate_objective.evaluate(&c)?;
        if candidate_state.value <= state.value {
            x_tilde = candidate;
            objective = candidate_objective;
            state = candidate_state;
        }
        last_kkt = stationarity(&problem, &objective, &c, &state, &x_tilde)?;
        trace.objective.push(state.value);
        trace.grad_norm.push(last_kkt.c_residual.hypot(last_kkt.x_residual));
        if let Some(track) = trace.epsilon_track.as_mut() {
            track.push(relaxed_epsilon(de_original, &state.theta_c, &x_tilde));
        }
        if !trace.restarts.contains(&outer) && small_change(previous, state.value, config.tol) {
            trace.converged = true;
            break;
        }
    }
    trace.de_relaxed = Some(inner(x_tilde.view(), state.theta_c.dot(&x_tilde).view()));

    let rounded = round_loading(c.view())?;
    trace.dropped_columns = rounded.dropped_columns;
    let loading = rounded.loading;
    let theta_c = coarsen_laplacian(theta, &loading)?;
    let x_final = xtilde_closed_form(&problem, loading.entries())?;
    let epsilon = epsilon_similarity(theta, x.view(), &theta_c, x_final.view())?;
    let coarsened = CoarsenedGraph::new(theta_c, loading)?.with_features(x_final)?;
    trace.wall_time = start.elapsed().as_secs_f64();
    Ok(FgcResult {
        coarsened,
        trace,
        epsilon,
        kkt_residuals: (last_kkt.c_residual, last_kkt.x_residual),
        relaxed_loading: c,
        relaxed_features: x_tilde,
    })
}
