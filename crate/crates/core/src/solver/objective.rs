//! Objective values and gradients of the FGC, GC and FGCR problems.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, inner, symmetrize, Laplacian, Spd, SymmetricOperator};

/// Graph, features and weights shared by every objective.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub theta: &'a Laplacian,
    pub features: Option<ArrayView2<'a, f64>>,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl<'a> Problem<'a> {
    pub fn new(theta: &'a Laplacian, features: Option<ArrayView2<'a, f64>>, gamma: f64, alpha: f64, lambda: f64) -> Self {
        Self { theta, features, gamma, alpha, lambda }
    }

    pub(crate) fn x(&self) -> Result<ArrayView2<'a, f64>> {
        self.features
            .ok_or_else(|| Error::InvalidParameter("this objective requires node features".into()))
    }
}

struct FitTerms<'a> {
    x: ArrayView2<'a, f64>,
    y: Array2<f64>,
    gram: Array2<f64>,
    cross: Array2<f64>,
}

impl<'a> FitTerms<'a> {
    fn new(x: ArrayView2<'a, f64>, y: Array2<f64>) -> Self {
        Self { gram: y.dot(&y.t()), cross: x.dot(&y.t()), x, y }
    }
}

/// The objective as a function of the loading matrix with the other blocks frozen.
///
/// `f(C) = −γ logdet(CᵀΘC + J) + tr(SᵀCᵀΘCS) + (α/2)‖CY − X‖² + (λ/2)‖C1‖²`
/// where `S` and `Y` are the smoothness and fit factors of the active solver.
pub struct CObjective<'a> {
    theta: &'a Laplacian,
    gamma: f64,
    alpha: f64,
    lambda: f64,
    smooth_gram: Option<Array2<f64>>,
    fit: Option<FitTerms<'a>>,
}

/// Intermediate products of one objective evaluation, reused by the gradient.
pub struct CState {
    pub value: f64,
    /// Sum of the absolute values of the individual terms, a scale for rounding error.
    pub magnitude: f64,
    pub theta_c: Array2<f64>,
    theta_times_c: Array2<f64>,
    factor: Spd,
}

impl<'a> CObjective<'a> {
    /// Featureless objective (log-det and group-size terms only).
    pub fn gc(problem: &Problem<'a>) -> Self {
        Self {
            theta: problem.theta,
            gamma: problem.gamma,
            alpha: problem.alpha,
            lambda: problem.lambda,
            smooth_gram: None,
            fit: None,
        }
    }

    /// FGC objective with coarse features `X̃` frozen.
    pub fn fgc(problem: &Problem<'a>, x_tilde: ArrayView2<f64>) -> Result<Self> {
        let x = problem.x()?;
        check_fit(problem.theta.dim(), x, x_tilde)?;
        let fit = FitTerms::new(x, x_tilde.to_owned());
        Ok(Self { smooth_gram: Some(fit.gram.clone()), fit: Some(fit), ..Self::gc(problem) })
    }

    /// FGCR objective with `W` and `H` frozen, equal to the FGC objective at `X̃ = WH`.
    pub fn fgcr(problem: &Problem<'a>, w: ArrayView2<f64>, h: ArrayView2<f64>) -> Result<Self> {
        check_factors(w, h)?;
        Self::fgc(problem, w.dot(&h).view())
    }

    /// Evaluates the objective; fails if `CᵀΘC + J` is not positive definite.
    pub fn evaluate(&self, c: &Array2<f64>) -> Result<CState> {
        let (p, k) = c.dim();
        if p != self.theta.dim() {
            return Err(Error::DimensionMismatch(format!(
                "C has {p} rows, Laplacian has {}",
                self.theta.dim()
            )));
        }
        let theta_times_c = self.theta.apply(c.view());
        let mut theta_c = c.t().dot(&theta_times_c);
        symmetrize(&mut theta_c);
        let j = 1.0 / k as f64;
        let factor = Spd::factor(&theta_c.mapv(|v| v + j))?;
        let mut terms = vec![-self.gamma * factor.logdet()];
        if let Some(s) = &self.smooth_gram {
            terms.push(inner(theta_c.view(), s.view()));
        }
        if let Some(fit) = &self.fit {
            terms.push(0.5 * self.alpha * frobenius_sq((c.dot(&fit.y) - fit.x).view()));
        }
        let row_sums = c.sum_axis(Axis(1));
        terms.push(0.5 * self.lambda * row_sums.dot(&row_sums));
        let value: f64 = terms.iter().sum();
        if !value.is_finite() {
            return Err(Error::NotPositiveDefinite("objective is not finite".into()));
        }
        let magnitude = terms.iter().map(|t| t.abs()).sum();
        Ok(CState { value, magnitude, theta_c, theta_times_c, factor })
    }

    /// Objective value, or `+∞` where it is undefined.
    pub fn value(&self, c: &Array2<f64>) -> f64 {
        self.evaluate(c).map(|s| s.value).unwrap_or(f64::INFINITY)
    }

    /// Gradient at the point evaluated into `state`.
    pub fn gradient(&self, c: &Array2<f64>, state: &CState) -> Result<Array2<f64>> {
        let mut inner_k = state.factor.inverse()? * (-2.0 * self.gamma);
        if let Some(s) = &self.smooth_gram {
            inner_k.scaled_add(2.0, s);
        }
        let mut grad = state.theta_times_c.dot(&inner_k);
        if let Some(fit) = &self.fit {
            grad.scaled_add(self.alpha, &c.dot(&fit.gram));
            grad.scaled_add(-self.alpha, &fit.cross);
        }
        let row_sums: Array1<f64> = c.sum_axis(Axis(1)) * self.lambda;
        grad += &row_sums.insert_axis(Axis(1));
        Ok(grad)
    }

    /// Lipschitz-type bound for the current iterate built from per-term estimates.
    pub fn analytic_lipschitz(&self, c: &Array2<f64>, state: &CState) -> f64 {
        let (p, k) = c.dim();
        let theta_f = self.theta.frobenius_sq().sqrt();
        let delta = (0..k)
            .flat_map(|a| (0..k).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| state.theta_c[[a, b]].abs())
            .filter(|&v| v > 1e-8)
            .fold(f64::INFINITY, f64::min);
        let delta = if delta.is_finite() { delta } else { 1e-8 };
        let mu = delta / ((k.max(2) - 1) as f64).powi(2);
        let l1 = self.gamma
            * (2.0 * theta_f / mu + 4.0 * frobenius_sq(state.theta_times_c.view()) / (mu * mu));
        let (l2, l3) = match (&self.smooth_gram, &self.fit) {
            (Some(s), Some(fit)) => {
                let n = fit.x.ncols() as f64;
                let s_tr = s.diag().sum();
                let y_tr = fit.gram.diag().sum();
                (2.0 * (p as f64).sqrt() * n.sqrt() * s_tr * theta_f, self.alpha * y_tr)
            }
            _ => (0.0, 0.0),
        };
        let l4 = self.lambda * k as f64;
        l1.max(l2).max(l3).max(l4)
    }
}

fn check_fit(p: usize, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if x.nrows() != p || x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "features {:?} incompatible with coarse factor {:?} for {p} nodes",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

fn check_factors(w: ArrayView2<f64>, h: ArrayView2<f64>) -> Result<()> {
    if w.ncols() != h.nrows() {
        return Err(Error::DimensionMismatch(format!("W is {:?} but H is {:?}", w.dim(), h.dim())));
    }
    Ok(())
}

/// `−γ logdet(CᵀΘC+J) + tr(X̃ᵀCᵀΘCX̃) + (α/2)‖CX̃−X‖² + (λ/2)‖C1‖²`.
pub fn objective_fgc(problem: &Problem, c: &Array2<f64>, x_tilde: ArrayView2<f64>) -> Result<f64> {
    Ok(CObjective::fgc(problem, x_tilde)?.evaluate(c)?.value)
}

/// Gradient of [`objective_fgc`] with respect to `C`.
pub fn grad_c_fgc(problem: &Problem, c: &Array2<f64>, x_tilde: ArrayView2<f64>) -> Result<Array2<f64>> {
    let obj = CObjective::fgc(problem, x_tilde)?;
    let state = obj.evaluate(c)?;
    obj.gradient(c, &state)
}

/// Gradient of [`objective_fgc`] with respect to `X̃`: `2CᵀΘCX̃ + αCᵀ(CX̃−X)`.
pub fn grad_xtilde_fgc(problem: &Problem, c: &Array2<f64>, x_tilde: ArrayView2<f64>) -> Result<Array2<f64>> {
    let x = problem.x()?;
    check_fit(problem.theta.dim(), x, x_tilde)?;
    let theta_c = c.t().dot(&problem.theta.apply(c.view()));
    let residual = c.dot(&x_tilde) - x;
    let mut grad = theta_c.dot(&x_tilde) * 2.0;
    grad.scaled_add(problem.alpha, &c.t().dot(&residual));
    Ok(grad)
}

/// `−γ logdet(CᵀΘC+J) + (λ/2)‖C1‖²`.
pub fn objective_gc(problem: &Problem, c: &Array2<f64>) -> Result<f64> {
    Ok(CObjective::gc(problem).evaluate(c)?.value)
}

/// Gradient of [`objective_gc`].
pub fn grad_c_gc(problem: &Problem, c: &Array2<f64>) -> Result<Array2<f64>> {
    let obj = CObjective::gc(problem);
    let state = obj.evaluate(c)?;
    obj.gradient(c, &state)
}

/// `−γ logdet(CᵀΘC+J) + tr((WH)ᵀCᵀΘC(WH)) + (α/2)‖CWH−X‖² + (λ/2)‖C1‖²`.
pub fn objective_fgcr(
    problem: &Problem,
    c: &Array2<f64>,
    w: ArrayView2<f64>,
    h: ArrayView2<f64>,
) -> Result<f64> {
    Ok(CObjective::fgcr(problem, w, h)?.evaluate(c)?.value)
}

/// Gradient of [`objective_fgcr`] with respect to `C`.
pub fn grad_c_fgcr(
    problem: &Problem,
    c: &Array2<f64>,
    w: ArrayView2<f64>,
    h: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let obj = CObjective::fgcr(problem, w, h)?;
    let state = obj.evaluate(c)?;
    obj.gradient(c, &state)
}

/// The FGCR objective restricted to `W` or `H` with `C` frozen.
///
/// Terms that do not depend on `W` or `H` are kept so values match [`objective_fgcr`].
pub struct FactorObjective<'a> {
    c: Array2<f64>,
    x: ArrayView2<'a, f64>,
    theta_c: Array2<f64>,
    ctc: Array2<f64>,
    ctx: Array2<f64>,
    alpha: f64,
    constant: f64,
}

impl<'a> FactorObjective<'a> {
    pub fn new(problem: &Problem<'a>, c: &Array2<f64>) -> Result<Self> {
        let x = problem.x()?;
        let state = CObjective::gc(problem).evaluate(c)?;
        Ok(Self {
            ctc: c.t().dot(c),
            ctx: c.t().dot(&x),
            c: c.clone(),
            x,
            alpha: problem.alpha,
            constant: state.value,
            theta_c: state.theta_c,
        })
    }

    /// Full objective value at `(W, H)`, or `+∞` on a shape mismatch.
    pub fn value(&self, w: ArrayView2<f64>, h: ArrayView2<f64>) -> f64 {
        if check_factors(w, h).is_err() {
            return f64::INFINITY;
        }
        let wh = w.dot(&h);
        let fit = frobenius_sq((self.c.dot(&wh) - self.x).view());
        self.constant + inner(wh.view(), self.theta_c.dot(&wh).view()) + 0.5 * self.alpha * fit
    }

    /// Gradient with respect to the product `X̃ = WH`: `2CᵀΘCX̃ + αCᵀ(CX̃ − X)`.
    fn product_gradient(&self, w: ArrayView2<f64>, h: ArrayView2<f64>) -> Array2<f64> {
        let wh = w.dot(&h);
        let mut g = self.theta_c.dot(&wh) * 2.0;
        g.scaled_add(self.alpha, &(self.ctc.dot(&wh) - &self.ctx));
        g
    }

    /// `2CᵀΘCWHHᵀ + αCᵀ(CWH − X)Hᵀ`.
    pub fn grad_w(&self, w: ArrayView2<f64>, h: ArrayView2<f64>) -> Array2<f64> {
        self.product_gradient(w, h).dot(&h.t())
    }

    /// `2WᵀCᵀΘCWH + αWᵀCᵀ(CWH − X)`.
    pub fn grad_h(&self, w: ArrayView2<f64>, h: ArrayView2<f64>) -> Array2<f64> {
        w.t().dot(&self.product_gradient(w, h))
    }
}

/// Gradient of [`objective_fgcr`] with respect to `W`.
pub fn grad_w_fgcr(
    problem: &Problem,
    c: &Array2<f64>,
    w: ArrayView2<f64>,
    h: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    Ok(FactorObjective::new(problem, c)?.grad_w(w, h))
}

/// Gradient of [`objective_fgcr`] with respect to `H`.
pub fn grad_h_fgcr(
    problem: &Problem,
    c: &Array2<f64>,
    w: ArrayView2<f64>,
    h: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    Ok(FactorObjective::new(problem, c)?.grad_h(w, h))
}
