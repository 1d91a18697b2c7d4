//! Coarsening quality metrics: REE, Dirichlet energy, HE, RE and ε-similarity.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{coarsen_features, coarsening_matrix, CoarsenedGraph, GraphData, LoadingMatrix};
use crate::linalg::{eigh, eigvalsh, frobenius_sq, inner, Laplacian, SymmetricOperator};

/// All quality metrics for one (original, coarsened) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ree: f64,
    pub de_original: f64,
    pub de_coarsened: f64,
    pub he: f64,
    pub re: f64,
    pub epsilon: f64,
    pub m_used: usize,
}

/// The `m` largest eigenvalues in descending order.
pub fn spectrum<T: SymmetricOperator + ?Sized>(theta: &T, m: usize) -> Result<Vec<f64>> {
    let n = theta.dim();
    if m > n {
        return Err(Error::InvalidParameter(format!("requested {m} eigenvalues of a {n}x{n} matrix")));
    }
    let eig = eigvalsh(&theta.dense())?;
    Ok(eig.iter().rev().take(m).copied().collect())
}

/// Mean relative deviation of the top-`m` eigenvalues of `theta_c` from those of `theta`.
pub fn relative_eigen_error<T: SymmetricOperator + ?Sized>(
    theta: &T,
    theta_c: &Array2<f64>,
    m: usize,
) -> Result<f64> {
    let k = theta_c.nrows();
    if m == 0 || m >= k {
        return Err(Error::InvalidParameter(format!(
            "REE needs 1 <= m <= k - 1, got m = {m} with k = {k}"
        )));
    }
    let original = spectrum(theta, m)?;
    let coarse = spectrum(theta_c, m)?;
    ree_from_spectra(&original, &coarse)
}

/// REE from two descending spectra of equal length.
pub fn ree_from_spectra(original: &[f64], coarse: &[f64]) -> Result<f64> {
    if original.len() != coarse.len() || original.is_empty() {
        return Err(Error::DimensionMismatch("spectra must be nonempty and of equal length".into()));
    }
    let mut total = 0.0;
    for (&l, &lc) in original.iter().zip(coarse) {
        if l <= 0.0 {
            return Err(Error::InvalidParameter("zero eigenvalue in the REE denominator".into()));
        }
        total += (lc - l).abs() / l;
    }
    Ok(total / original.len() as f64)
}

/// Dirichlet energy `tr(XᵀΘX)`.
pub fn dirichlet_energy<T: SymmetricOperator + ?Sized>(theta: &T, x: ArrayView2<f64>) -> Result<f64> {
    if x.nrows() != theta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, Laplacian has {}",
            x.nrows(),
            theta.dim()
        )));
    }
    Ok(inner(x, theta.apply(x).view()))
}

/// Hyperbolic error between `theta` and a lifted Laplacian, weighted by features `x`.
pub fn hyperbolic_error<T: SymmetricOperator + ?Sized>(
    theta: &T,
    theta_lift: &Array2<f64>,
    x: ArrayView2<f64>,
) -> Result<f64> {
    if theta_lift.dim() != (theta.dim(), theta.dim()) {
        return Err(Error::DimensionMismatch("lifted Laplacian shape differs from the original".into()));
    }
    let tx = theta.apply(x);
    let lx = theta_lift.dot(&x);
    hyperbolic_from_products(x, &tx, &lx)
}

fn hyperbolic_from_products(x: ArrayView2<f64>, tx: &Array2<f64>, lx: &Array2<f64>) -> Result<f64> {
    if tx.dim() != x.dim() {
        return Err(Error::DimensionMismatch("features do not match the Laplacian".into()));
    }
    let de = inner(x, tx.view());
    let de_lift = inner(x, lx.view());
    if !(de > 0.0 && de_lift > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hyperbolic error needs positive Dirichlet energies, got {de} and {de_lift}"
        )));
    }
    let diff = frobenius_sq((tx - lx).view());
    let arg = 1.0 + diff * frobenius_sq(x) / (2.0 * de * de_lift);
    Ok(arg.acosh())
}

/// Squared Frobenius distance `‖Θ − Θ_lift‖²_F`.
pub fn reconstruction_error<T: SymmetricOperator + ?Sized>(
    theta: &T,
    theta_lift: &Array2<f64>,
) -> Result<f64> {
    if theta_lift.dim() != (theta.dim(), theta.dim()) {
        return Err(Error::DimensionMismatch("lifted Laplacian shape differs from the original".into()));
    }
    Ok(frobenius_sq((theta.dense().as_ref() - theta_lift).view()))
}

/// `‖Θ − PᵀΘ_cP‖²_F` evaluated without forming the dense lift.
pub fn reconstruction_error_sparse(
    theta: &Laplacian,
    theta_c: &Array2<f64>,
    c: &LoadingMatrix,
) -> Result<f64> {
    let assignment = c
        .assignment()
        .ok_or_else(|| Error::InvalidLoading("requires a binary loading matrix".into()))?;
    let sizes: Vec<f64> = c.group_sizes().unwrap().into_iter().map(|s| s as f64).collect();
    let k = c.k();
    if theta_c.dim() != (k, k) || c.p() != theta.dim() {
        return Err(Error::DimensionMismatch("coarse Laplacian, loading and Θ disagree".into()));
    }
    let lift = |i: usize, j: usize| {
        let (a, b) = (assignment[i], assignment[j]);
        theta_c[[a, b]] / (sizes[a] * sizes[b])
    };
    let mut lift_sq = 0.0;
    for a in 0..k {
        for b in 0..k {
            lift_sq += theta_c[[a, b]].powi(2) / (sizes[a] * sizes[b]);
        }
    }
    let mut cross = 0.0;
    let diag = theta.diagonal();
    for i in 0..theta.dim() {
        cross += diag[i] * lift(i, i);
        for (j, w) in theta.neighbors(i) {
            cross -= w * lift(i, j);
        }
    }
    Ok((theta.frobenius_sq() - 2.0 * cross + lift_sq).max(0.0))
}

/// Tight ε with `(1−ε)‖X‖_Θ ≤ ‖X̃‖_{Θ_c} ≤ (1+ε)‖X‖_Θ`.
pub fn epsilon_similarity<T: SymmetricOperator + ?Sized>(
    theta: &T,
    x: ArrayView2<f64>,
    theta_c: &Array2<f64>,
    x_c: ArrayView2<f64>,
) -> Result<f64> {
    let norm = dirichlet_energy(theta, x)?.max(0.0).sqrt();
    if norm <= 0.0 {
        return Err(Error::InvalidParameter("‖X‖_Θ is zero (constant features)".into()));
    }
    let norm_c = dirichlet_energy(theta_c, x_c)?.max(0.0).sqrt();
    Ok((norm - norm_c).abs() / norm)
}

/// Eigenvector of the smallest nonzero eigenvalue.
pub fn fiedler_vector<T: SymmetricOperator + ?Sized>(theta: &T) -> Result<Array1<f64>> {
    if theta.dim() < 2 {
        return Err(Error::InvalidParameter("Fiedler vector needs at least two nodes".into()));
    }
    let (_, vecs) = eigh(&theta.dense())?;
    Ok(vecs.column(1).to_owned())
}

/// Computes every metric, falling back to the Fiedler vector when the graph has no features.
///
/// Coarse features default to `P X` when the coarsened graph carries none.
pub fn metric_report(graph: &GraphData, coarse: &CoarsenedGraph, m: usize) -> Result<MetricReport> {
    let theta = graph.laplacian();
    let theta_c = coarse.laplacian();
    let c = coarse.loading();
    let m_used = m.min(coarse.k().saturating_sub(1));
    let ree = relative_eigen_error(theta, theta_c, m_used)?;
    let (x, x_c) = match (graph.features(), coarse.features()) {
        (Some(x), Some(xc)) => (x.clone(), xc.clone()),
        (Some(x), None) => (x.clone(), coarsen_features(x.view(), c)?),
        (None, _) => {
            let f = fiedler_vector(theta)?.insert_axis(Axis(1));
            let fc = coarsen_features(f.view(), c)?;
            (f, fc)
        }
    };
    let tx = theta.apply(x.view());
    let p_mat = coarsening_matrix(c)?;
    let lx = p_mat.t().dot(&theta_c.dot(&p_mat.dot(&x)));
    let he = hyperbolic_from_products(x.view(), &tx, &lx)?;
    let re = reconstruction_error_sparse(theta, theta_c, c)?;
    let de_original = inner(x.view(), tx.view());
    let de_coarsened = dirichlet_energy(theta_c, x_c.view())?;
    let epsilon = epsilon_similarity(theta, x.view(), theta_c, x_c.view())?;
    Ok(MetricReport { ree, de_original, de_coarsened, he, re, epsilon, m_used })
}
