//! Coarsening with simultaneous feature-dimension reduction `X̃ = WH`.

use std::time::Instant;

use ndarray::{s, Array2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fgc::xtilde_closed_form;
use crate::graph::{coarsen_laplacian, round_loading, CoarsenedGraph, GraphData};
use crate::linalg::frobenius_sq;
use crate::solver::{
    backtracking_step, projected_residual, random_loading, repair_zero_rows, run_c_steps,
    small_change, CObjective, FactorObjective, Problem, SolverConfig, SolverTrace,
    INITIAL_LIPSCHITZ,
};

/// Output of [`fgcr_solve`].
#[derive(Debug, Clone)]
pub struct FgcrResult {
    /// Coarsened graph carrying `W`, `H` and `X̃ = WH`.
    pub coarsened: CoarsenedGraph,
    pub trace: SolverTrace,
    /// Final relaxed loading matrix before rounding.
    pub relaxed_loading: Array2<f64>,
}

/// Balanced rank-`d` factorization `W = U√Σ`, `H = √ΣVᵀ` of `x_tilde`.
///
/// Directions beyond the numerical rank receive small random rows in `H`.
pub(crate) fn truncated_factors(
    x_tilde: &Array2<f64>,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (k, n) = x_tilde.dim();
    let (u, sigma, vt) = x_tilde.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| Error::Linalg("SVD returned no left vectors".into()))?;
    let vt = vt.ok_or_else(|| Error::Linalg("SVD returned no right vectors".into()))?;
    let r = d.min(sigma.len());
    let root = sigma.slice(s![..r]).mapv(f64::sqrt);
    let mut w = Array2::zeros((k, d));
    let mut h = Array2::zeros((d, n));
    w.slice_mut(s![.., ..r]).assign(&(&u.slice(s![.., ..r]) * &root));
    h.slice_mut(s![..r, ..]).assign(&(&vt.slice(s![..r, ..]) * &root.insert_axis(Axis(1))));
    let scale = 1e-3 * sigma.first().copied().unwrap_or(1.0).max(1e-12).sqrt() / (n as f64).sqrt();
    for mut row in h.rows_mut().into_iter().skip(r) {
        row.mapv_inplace(|_| scale * (rng.random::<f64>() - 0.5));
    }
    Ok((w, h))
}

fn factor_residual(
    problem: &Problem,
    c: &Array2<f64>,
    w: &Array2<f64>,
    h: &Array2<f64>,
) -> Result<f64> {
    let objective = CObjective::fgcr(problem, w.view(), h.view())?;
    let state = objective.evaluate(c)?;
    let r_c = projected_residual(c, &objective.gradient(c, &state)?);
    let factors = FactorObjective::new(problem, c)?;
    let r_w = frobenius_sq(factors.grad_w(w.view(), h.view()).view());
    let r_h = frobenius_sq(factors.grad_h(w.view(), h.view()).view());
    Ok((r_c * r_c + r_w + r_h).sqrt())
}

/// Cyclic `C → W → H` block updates followed by rounding of `C`.
///
/// Each outer iteration takes `inner_iters` loading-matrix steps, then `inner_iters`
/// alternating steps on `W` and `H`.
pub fn fgcr_solve(graph: &GraphData, config: &SolverConfig) -> Result<FgcrResult> {
    let start = Instant::now();
    config.validate()?;
    let x = graph.require_features("FGCR")?;
    let p = graph.p();
    let k = config.supernode_count(p)?;
    let d = config.reduced_dim(x.ncols())?;
    let theta = graph.laplacian();
    let problem = config.problem(theta, Some(x.view()));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut c = random_loading(p, k, &mut rng)?;
    let (mut w, mut h) = truncated_factors(&xtilde_closed_form(&problem, &c)?, d, &mut rng)?;

    let mut trace = SolverTrace::default();
    trace.objective.push(CObjective::fgcr(&problem, w.view(), h.view())?.evaluate(&c)?.value);
    trace.grad_norm.push(factor_residual(&problem, &c, &w, &h)?);
    let mut restarted = vec![false; p];
    let (mut l_c, mut l_w, mut l_h) = (INITIAL_LIPSCHITZ, INITIAL_LIPSCHITZ, INITIAL_LIPSCHITZ);
    let mut value = trace.objective[0];
    let identity = |a: &Array2<f64>| a.clone();

    for outer in 1..=config.outer_iters {
        let previous = value;
        let objective = CObjective::fgcr(&problem, w.view(), h.view())?;
        let state = objective.evaluate(&c)?;
        (c, _) = run_c_steps(&objective, c, state, config, &mut l_c, &mut trace.step_fallbacks)?;

        let factors = FactorObjective::new(&problem, &c)?;
        for _ in 0..config.inner_iters {
            let fw = factors.value(w.view(), h.view());
            let grad_w = factors.grad_w(w.view(), h.view());
            if let Ok(step) = backtracking_step(|v| factors.value(v.view(), h.view()), identity, &w, fw, &grad_w, l_w * 0.5) {
                l_w = step.lipschitz;
                if step.value <= fw {
                    w = step.point;
                }
            }
            let fh = factors.value(w.view(), h.view());
            let grad_h = factors.grad_h(w.view(), h.view());
            if let Ok(step) = backtracking_step(|v| factors.value(w.view(), v.view()), identity, &h, fh, &grad_h, l_h * 0.5) {
                l_h = step.lipschitz;
                if step.value <= fh {
                    h = step.point;
                }
            }
        }
        value = factors.value(w.view(), h.view());
        if repair_zero_rows(&mut c, &mut restarted, &mut rng)? {
            trace.restarts.push(outer);
            value = CObjective::fgcr(&problem, w.view(), h.view())?.evaluate(&c)?.value;
        }
        trace.objective.push(value);
        trace.grad_norm.push(factor_residual(&problem, &c, &w, &h)?);
        if !trace.restarts.contains(&outer) && small_change(previous, value, config.tol) {
            trace.converged = true;
            break;
        }
    }

    let rounded = round_loading(c.view())?;
    trace.dropped_columns = rounded.dropped_columns;
    let kept: Vec<usize> = (0..k).filter(|j| !trace.dropped_columns.contains(j)).collect();
    let w_kept = w.select(Axis(0), &kept);
    let theta_c = coarsen_laplacian(theta, &rounded.loading)?;
    let coarsened = CoarsenedGraph::new(theta_c, rounded.loading)?.with_factorization(w_kept, h)?;
    trace.wall_time = start.elapsed().as_secs_f64();
    Ok(FgcrResult { coarsened, trace, relaxed_loading: c })
}
