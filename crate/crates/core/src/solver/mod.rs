//! Block majorization-minimization machinery shared by the FGC, GC and FGCR solvers.

mod objective;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, inner};

pub use objective::{
    grad_c_fgc, grad_c_fgcr, grad_c_gc, grad_h_fgcr, grad_w_fgcr, grad_xtilde_fgc, objective_fgc,
    objective_fgcr, objective_gc, CObjective, CState, FactorObjective, Problem,
};

/// Doubling budget for backtracking.
pub const MAX_DOUBLINGS: usize = 60;
/// Initial step constant for backtracking when no previous value exists.
pub const INITIAL_LIPSCHITZ: f64 = 1.0;

/// How the step constant `L` of the quadratic majorizer is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// Per-term Lipschitz estimates, recomputed at every iterate.
    #[serde(rename = "analytic")]
    AnalyticBound,
    /// Doubling until the majorizer dominates the objective at the trial point.
    #[serde(rename = "backtrack")]
    Backtracking,
    /// `L = k`, i.e. a learning rate of `1/k`.
    #[serde(rename = "inv-k")]
    FixedInverseK,
}

/// Map from the gradient-step matrix back onto the feasible set of relaxed loading matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    /// Nearest feasible point: clip negatives, then shrink rows with norm above one.
    Euclidean,
    /// Divide each row by its norm, then clip negatives.
    RowScaled,
}

/// Hyperparameters and iteration budget of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Coarsening ratio `k / p`.
    pub ratio: f64,
    /// Feature reduction ratio `d / n` (FGCR only).
    pub reduction_ratio: Option<f64>,
    /// Explicit supernode count overriding `ratio`.
    pub supernodes: Option<usize>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub step_rule: StepRule,
    pub projection: Projection,
    /// Relative objective change below which the outer loop stops.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1000.0,
            alpha: 500.0,
            lambda: 500.0,
            ratio: 0.3,
            reduction_ratio: None,
            supernodes: None,
            outer_iters: 10,
            inner_iters: 100,
            step_rule: StepRule::Backtracking,
            projection: Projection::Euclidean,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Checks weights, ratios and budgets.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("alpha", self.alpha), ("lambda", self.lambda)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ratio must lie in (0, 1), got {}",
                self.ratio
            )));
        }
        if let Some(rr) = self.reduction_ratio {
            if !(rr > 0.0 && rr <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "reduction ratio must lie in (0, 1], got {rr}"
                )));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::InvalidParameter("iteration budgets must be positive".into()));
        }
        Ok(())
    }

    /// Supernode count for a graph with `p` nodes: `max(2, round(ratio · p))` unless overridden.
    pub fn supernode_count(&self, p: usize) -> Result<usize> {
        let k = match self.supernodes {
            Some(k) => k,
            None => ((self.ratio * p as f64).round() as usize).max(2),
        };
        if k < 2 || k >= p {
            return Err(Error::InvalidParameter(format!(
                "supernode count must satisfy 2 <= k < p, got k = {k}, p = {p}"
            )));
        }
        Ok(k)
    }

    /// Reduced feature dimension `max(1, round(rr · n))`.
    pub fn reduced_dim(&self, n: usize) -> Result<usize> {
        let rr = self
            .reduction_ratio
            .ok_or_else(|| Error::InvalidParameter("reduction ratio is required".into()))?;
        let d = ((rr * n as f64).round() as usize).max(1);
        if d > n {
            return Err(Error::InvalidParameter(format!("reduced dimension {d} exceeds {n}")));
        }
        Ok(d)
    }

    pub fn problem<'a>(
        &self,
        theta: &'a crate::linalg::Laplacian,
        features: Option<ndarray::ArrayView2<'a, f64>>,
    ) -> Problem<'a> {
        Problem::new(theta, features, self.gamma, self.alpha, self.lambda)
    }
}

/// Per-iteration diagnostics of a solver run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    /// Objective at the initial point and after every outer iteration.
    pub objective: Vec<f64>,
    /// Stationarity residual at the initial point and after every outer iteration.
    pub grad_norm: Vec<f64>,
    /// ε-similarity of the relaxed iterate after every outer iteration.
    pub epsilon_track: Option<Vec<f64>>,
    pub wall_time: f64,
    /// Outer iterations after which a zero row was re-randomized.
    pub restarts: Vec<usize>,
    /// Fixed-rule steps that fell back to backtracking because they failed to descend.
    pub step_fallbacks: usize,
    /// Whether the relative objective change dropped below `tol`.
    pub converged: bool,
    /// Columns emptied by rounding.
    pub dropped_columns: Vec<usize>,
    /// Dirichlet energy of the relaxed iterate before rounding.
    pub de_relaxed: Option<f64>,
}

impl SolverTrace {
    /// Whether the objective never increases by more than `slack`, ignoring restart boundaries.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective.windows(2).enumerate().all(|(i, w)| {
            self.restarts.contains(&(i + 1)) || w[1] <= w[0] + slack
        })
    }

    /// Final residual relative to the initial one.
    pub fn residual_ratio(&self) -> f64 {
        match (self.grad_norm.first(), self.grad_norm.last()) {
            (Some(&first), Some(&last)) if first > 0.0 => last / first,
            _ => 0.0,
        }
    }
}

/// Row-wise normalization followed by clipping: `max(a_ij / ‖a_i‖, 0)`.
pub fn project_nonneg_rowscaled(a: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = a.clone();
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroRow { row: i });
        }
        row.mapv_inplace(|v| (v / norm).max(0.0));
    }
    Ok(out)
}

/// Euclidean projection onto `{C ≥ 0, ‖row_i‖ ≤ 1}`.
pub fn project_euclidean(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.mapv(|v| v.max(0.0));
    for mut row in out.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 1.0 {
            row /= norm;
        }
    }
    out
}

fn apply_projection(kind: Projection, a: &Array2<f64>) -> Array2<f64> {
    match kind {
        Projection::Euclidean => project_euclidean(a),
        Projection::RowScaled => project_nonneg_rowscaled(a).unwrap_or_else(|_| {
            let mut out = a.clone();
            for mut row in out.axis_iter_mut(Axis(0)) {
                let norm = row.dot(&row).sqrt();
                row.mapv_inplace(|v| if norm > 0.0 { (v / norm).max(0.0) } else { 0.0 });
            }
            out
        }),
    }
}

/// Quadratic majorizer `g(C′|C) = f(C) + ⟨∇f(C), C′ − C⟩ + (L/2)‖C′ − C‖²`.
pub fn majorizer(f_c: f64, grad: &Array2<f64>, c: &Array2<f64>, c_new: &Array2<f64>, l: f64) -> f64 {
    let d = c_new - c;
    f_c + inner(grad.view(), d.view()) + 0.5 * l * frobenius_sq(d.view())
}

fn slack(f: f64) -> f64 {
    1e-12 * (1.0 + f.abs())
}

/// Step constant for the non-adaptive rules.
pub fn step_length(rule: StepRule, objective: &CObjective, c: &Array2<f64>, state: &CState) -> Option<f64> {
    match rule {
        StepRule::FixedInverseK => Some(c.ncols() as f64),
        StepRule::AnalyticBound => Some(objective.analytic_lipschitz(c, state)),
        StepRule::Backtracking => None,
    }
}

/// Accepted projected-gradient step.
#[derive(Debug, Clone)]
pub struct Step {
    pub point: Array2<f64>,
    pub value: f64,
    pub lipschitz: f64,
    pub doublings: usize,
}

/// Doubles `L` from `l_start` until `f(x⁺) ≤ g(x⁺|x)` where `x⁺ = project(x − ∇f/L)`.
pub fn backtracking_step<F, P>(
    value_at: F,
    project: P,
    x: &Array2<f64>,
    fx: f64,
    grad: &Array2<f64>,
    l_start: f64,
) -> Result<Step>
where
    F: FnMut(&Array2<f64>) -> f64,
    P: Fn(&Array2<f64>) -> Array2<f64>,
{
    backtracking_with_slack(value_at, project, x, fx, grad, l_start, slack(fx))
}

/// [`backtracking_step`] with an explicit tolerance for rounding error in `f`.
pub(crate) fn backtracking_with_slack<F, P>(
    mut value_at: F,
    project: P,
    x: &Array2<f64>,
    fx: f64,
    grad: &Array2<f64>,
    l_start: f64,
    tolerance: f64,
) -> Result<Step>
where
    F: FnMut(&Array2<f64>) -> f64,
    P: Fn(&Array2<f64>) -> Array2<f64>,
{
    let mut l = l_start;
    for doublings in 0..=MAX_DOUBLINGS {
        let trial = x - &(grad / l);
        let point = project(&trial);
        let value = value_at(&point);
        if value.is_finite() && value <= majorizer(fx, grad, x, &point, l) + tolerance {
            return Ok(Step { point, value, lipschitz: l, doublings });
        }
        l *= 2.0;
    }
    Err(Error::BacktrackingExhausted(MAX_DOUBLINGS))
}

/// One projected-gradient update of the loading matrix under the configured step rule.
///
/// Fixed rules that fail to descend fall back to backtracking from twice their constant;
/// `fallbacks` counts such events. `l_memory` carries the backtracking constant between calls.
pub(crate) fn c_step(
    objective: &CObjective,
    c: &Array2<f64>,
    state: &CState,
    config: &SolverConfig,
    l_memory: &mut f64,
    fallbacks: &mut usize,
) -> Result<Option<(Array2<f64>, CState)>> {
    let grad = objective.gradient(c, state)?;
    let project = |a: &Array2<f64>| apply_projection(config.projection, a);
    let fx = state.value;
    let start = match step_length(config.step_rule, objective, c, state) {
        Some(l) => {
            let point = project(&(c - &(&grad / l)));
            if let Ok(next) = objective.evaluate(&point) {
                if next.value <= fx {
                    return Ok(Some((point, next)));
                }
            }
            *fallbacks += 1;
            2.0 * l
        }
        None => (*l_memory * 0.5).max(f64::MIN_POSITIVE),
    };
    if config.projection == Projection::RowScaled {
        return Ok(descent_search(objective, c, fx, &grad, start, l_memory, config.step_rule));
    }
    let tolerance = slack(state.magnitude);
    let step = match backtracking_with_slack(|p| objective.value(p), project, c, fx, &grad, start, tolerance) {
        Ok(step) => step,
        Err(Error::BacktrackingExhausted(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if config.step_rule == StepRule::Backtracking {
        *l_memory = step.lipschitz;
    }
    if step.value > fx {
        return Ok(None);
    }
    let next = objective.evaluate(&step.point)?;
    Ok(Some((step.point, next)))
}

/// Doubles `L` until the row-scaled update does not increase the objective.
fn descent_search(
    objective: &CObjective,
    c: &Array2<f64>,
    fx: f64,
    grad: &Array2<f64>,
    l_start: f64,
    l_memory: &mut f64,
    rule: StepRule,
) -> Option<(Array2<f64>, CState)> {
    let mut l = l_start;
    for _ in 0..=MAX_DOUBLINGS {
        let point = apply_projection(Projection::RowScaled, &(c - &(grad / l)));
        if let Ok(next) = objective.evaluate(&point) {
            if next.value <= fx {
                if rule == StepRule::Backtracking {
                    *l_memory = l;
                }
                return Some((point, next));
            }
        }
        l *= 2.0;
    }
    None
}

/// Runs up to `config.inner_iters` loading-matrix updates, stopping early on stagnation.
pub(crate) fn run_c_steps(
    objective: &CObjective,
    mut c: Array2<f64>,
    mut state: CState,
    config: &SolverConfig,
    l_memory: &mut f64,
    fallbacks: &mut usize,
) -> Result<(Array2<f64>, CState)> {
    for _ in 0..config.inner_iters {
        match c_step(objective, &c, &state, config, l_memory, fallbacks)? {
            Some((next_c, next_state)) => {
                c = next_c;
                state = next_state;
            }
            None => break,
        }
    }
    Ok((c, state))
}

/// Projected-gradient stationarity residual `‖C − Π(C − ∇f(C))‖_F`.
pub fn projected_residual(c: &Array2<f64>, grad: &Array2<f64>) -> f64 {
    frobenius_sq((c - &project_euclidean(&(c - grad))).view()).sqrt()
}

/// Stationarity diagnostics of an FGC candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Projected-gradient residual of the loading matrix.
    pub c_residual: f64,
    /// Gradient norm with respect to the coarse features.
    pub x_residual: f64,
    pub satisfied: bool,
}

/// Checks first-order stationarity of `(C, X̃)` for the FGC objective.
pub fn check_kkt_fgc(
    problem: &Problem,
    c: &Array2<f64>,
    x_tilde: &Array2<f64>,
    tol: f64,
) -> Result<KktReport> {
    let grad_c = grad_c_fgc(problem, c, x_tilde.view())?;
    let grad_x = grad_xtilde_fgc(problem, c, x_tilde.view())?;
    let c_residual = projected_residual(c, &grad_c);
    let x_residual = frobenius_sq(grad_x.view()).sqrt();
    Ok(KktReport { c_residual, x_residual, satisfied: c_residual < tol && x_residual < tol })
}

/// Uniform `[0, 1)` entries passed through the row-scaled projection.
pub(crate) fn random_loading(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let raw = Array2::from_shape_simple_fn((p, k), || rng.random::<f64>());
    project_nonneg_rowscaled(&raw)
}

/// Re-randomizes zero rows once each; a row that collapses twice is an error.
pub(crate) fn repair_zero_rows(
    c: &mut Array2<f64>,
    restarted: &mut [bool],
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let mut changed = false;
    for (i, mut row) in c.axis_iter_mut(Axis(0)).enumerate() {
        if row.iter().all(|&v| v == 0.0) {
            if restarted[i] {
                return Err(Error::ZeroRow { row: i });
            }
            restarted[i] = true;
            row.mapv_inplace(|_| rng.random::<f64>());
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
            changed = true;
        }
    }
    Ok(changed)
}

/// Relative objective change test.
pub(crate) fn small_change(prev: f64, cur: f64, tol: f64) -> bool {
    (prev - cur).abs() <= tol * prev.abs().max(1.0)
}
