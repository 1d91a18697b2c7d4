//! Graph data types, Laplacian validation, and the coarsening/lifting algebra.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, symmetrize, Laplacian, SymmetricOperator};

/// Relative tolerance on Laplacian row sums, scaled by the largest diagonal entry.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Eigenvalues below this fraction of the largest eigenvalue count as zero.
pub const RANK_TOL: f64 = 1e-9;

/// An undirected weighted graph with optional node features.
#[derive(Debug, Clone)]
pub struct GraphData {
    name: String,
    laplacian: Laplacian,
    features: Option<Array2<f64>>,
}

impl GraphData {
    /// Builds a connected graph, checking that the feature rows match the node count.
    pub fn new(
        name: impl Into<String>,
        laplacian: Laplacian,
        features: Option<Array2<f64>>,
    ) -> Result<Self> {
        let p = laplacian.dim();
        if p == 0 {
            return Err(Error::InvalidParameter("graph has no nodes".into()));
        }
        if let Some(x) = &features {
            if x.nrows() != p {
                return Err(Error::DimensionMismatch(format!(
                    "feature matrix has {} rows, graph has {p} nodes",
                    x.nrows()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("features contain non-finite values".into()));
            }
        }
        let components = laplacian.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(Self { name: name.into(), laplacian, features })
    }

    /// Builds a graph from an edge list.
    pub fn from_edges(
        name: impl Into<String>,
        p: usize,
        edges: &[(usize, usize, f64)],
        features: Option<Array2<f64>>,
    ) -> Result<Self> {
        Self::new(name, Laplacian::from_edges(p, edges)?, features)
    }

    /// Replaces the features.
    pub fn with_features(self, features: Option<Array2<f64>>) -> Result<Self> {
        Self::new(self.name, self.laplacian, features)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Node count.
    pub fn p(&self) -> usize {
        self.laplacian.dim()
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn features(&self) -> Option<&Array2<f64>> {
        self.features.as_ref()
    }

    /// Features, or an error naming the operation that needs them.
    pub fn require_features(&self, what: &str) -> Result<&Array2<f64>> {
        self.features
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("{what} requires node features")))
    }
}

/// Storage form of a loading matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadingForm {
    Relaxed,
    Binary,
}

/// A `p × k` nonnegative node-to-supernode map.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix {
    entries: Array2<f64>,
    form: LoadingForm,
    assignment: Option<Vec<usize>>,
}

impl LoadingMatrix {
    /// Validates a binary loading matrix: one unit entry per row, no empty column.
    pub fn binary(entries: Array2<f64>) -> Result<Self> {
        let (p, k) = entries.dim();
        if k == 0 || p == 0 {
            return Err(Error::InvalidLoading("empty matrix".into()));
        }
        let mut assignment = Vec::with_capacity(p);
        let mut sizes = vec![0usize; k];
        for (i, row) in entries.rows().into_iter().enumerate() {
            let mut hit = None;
            for (j, &v) in row.iter().enumerate() {
                if v == 1.0 {
                    if hit.is_some() {
                        return Err(Error::InvalidLoading(format!("row {i} has several nonzeros")));
                    }
                    hit = Some(j);
                } else if v != 0.0 {
                    return Err(Error::InvalidLoading(format!(
                        "entry ({i}, {j}) = {v} is neither 0 nor 1"
                    )));
                }
            }
            let j = hit.ok_or_else(|| Error::InvalidLoading(format!("row {i} is empty")))?;
            sizes[j] += 1;
            assignment.push(j);
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidLoading(format!("column {j} is empty")));
        }
        Ok(Self { entries, form: LoadingForm::Binary, assignment: Some(assignment) })
    }

    /// Binary loading matrix from a node-to-supernode assignment.
    pub fn from_assignment(assignment: &[usize], k: usize) -> Result<Self> {
        let mut entries = Array2::zeros((assignment.len(), k));
        for (i, &j) in assignment.iter().enumerate() {
            if j >= k {
                return Err(Error::InvalidLoading(format!(
                    "node {i} assigned to supernode {j} but k = {k}"
                )));
            }
            entries[[i, j]] = 1.0;
        }
        Self::binary(entries)
    }

    /// Validates a relaxed loading matrix: nonnegative with row 2-norms at most one.
    pub fn relaxed(entries: Array2<f64>) -> Result<Self> {
        for (i, row) in entries.rows().into_iter().enumerate() {
            if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidLoading(format!("row {i} has a negative entry")));
            }
            let norm_sq: f64 = row.iter().map(|v| v * v).sum();
            if norm_sq > 1.0 + 1e-12 {
                return Err(Error::InvalidLoading(format!(
                    "row {i} has 2-norm {} > 1",
                    norm_sq.sqrt()
                )));
            }
        }
        Ok(Self { entries, form: LoadingForm::Relaxed, assignment: None })
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn form(&self) -> LoadingForm {
        self.form
    }

    /// Node count.
    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    /// Supernode count.
    pub fn k(&self) -> usize {
        self.entries.ncols()
    }

    /// Supernode index of every node (binary form only).
    pub fn assignment(&self) -> Option<&[usize]> {
        self.assignment.as_deref()
    }

    /// Nodes per supernode, i.e. the diagonal of `CᵀC` (binary form only).
    pub fn group_sizes(&self) -> Option<Vec<usize>> {
        let assignment = self.assignment.as_ref()?;
        let mut sizes = vec![0usize; self.k()];
        for &j in assignment {
            sizes[j] += 1;
        }
        Some(sizes)
    }

    fn require_binary(&self) -> Result<&[usize]> {
        self.assignment
            .as_deref()
            .ok_or_else(|| Error::InvalidLoading("operation requires a binary loading matrix".into()))
    }
}

/// A coarsened graph with its loading matrix and optional coarse features.
#[derive(Debug, Clone)]
pub struct CoarsenedGraph {
    laplacian: Array2<f64>,
    loading: LoadingMatrix,
    features: Option<Array2<f64>>,
    reduced_features: Option<Array2<f64>>,
    transform: Option<Array2<f64>>,
}

impl CoarsenedGraph {
    /// Checks that `laplacian` is a valid `k × k` Laplacian with `k < p`.
    pub fn new(laplacian: Array2<f64>, loading: LoadingMatrix) -> Result<Self> {
        let k = loading.k();
        if laplacian.dim() != (k, k) {
            return Err(Error::DimensionMismatch(format!(
                "coarse Laplacian is {:?}, loading matrix has {k} columns",
                laplacian.dim()
            )));
        }
        if k >= loading.p() {
            return Err(Error::InvalidParameter(format!(
                "coarse graph must be smaller: k = {k}, p = {}",
                loading.p()
            )));
        }
        validate_laplacian(laplacian.view())?;
        Ok(Self { laplacian, loading, features: None, reduced_features: None, transform: None })
    }

    /// Attaches coarse features `X̃` (`k × n`).
    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.k() {
            return Err(Error::DimensionMismatch(format!(
                "coarse features have {} rows, k = {}",
                features.nrows(),
                self.k()
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    /// Attaches the factorization `X̃ = W H` and sets the coarse features to the product.
    pub fn with_factorization(mut self, w: Array2<f64>, h: Array2<f64>) -> Result<Self> {
        if w.nrows() != self.k() || w.ncols() != h.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "factor shapes {:?} and {:?} incompatible with k = {}",
                w.dim(),
                h.dim(),
                self.k()
            )));
        }
        self.features = Some(w.dot(&h));
        self.reduced_features = Some(w);
        self.transform = Some(h);
        Ok(self)
    }

    /// Supernode count.
    pub fn k(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn laplacian(&self) -> &Array2<f64> {
        &self.laplacian
    }

    pub fn loading(&self) -> &LoadingMatrix {
        &self.loading
    }

    pub fn features(&self) -> Option<&Array2<f64>> {
        self.features.as_ref()
    }

    pub fn reduced_features(&self) -> Option<&Array2<f64>> {
        self.reduced_features.as_ref()
    }

    pub fn transform(&self) -> Option<&Array2<f64>> {
        self.transform.as_ref()
    }
}

/// Checks symmetry, nonpositive off-diagonals and zero row sums.
pub fn validate_laplacian(theta: ArrayView2<f64>) -> Result<()> {
    let (n, m) = theta.dim();
    if n != m {
        return Err(Error::DimensionMismatch(format!("Laplacian is {n}x{m}")));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidLaplacian("non-finite entry".into()));
    }
    let scale = (0..n).map(|i| theta[[i, i]]).fold(0.0, f64::max);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = theta[[i, j]];
            if v != theta[[j, i]] {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
            if i != j && v > 0.0 {
                return Err(Error::InvalidLaplacian(format!("positive off-diagonal at ({i}, {j})")));
            }
            sum += v;
        }
        if sum.abs() > ROW_SUM_TOL * scale {
            return Err(Error::InvalidLaplacian(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Number of eigenvalues whose magnitude is below `RANK_TOL · λ_max`.
pub fn zero_eigenvalue_count(theta: &Array2<f64>) -> Result<usize> {
    let eig = eigvalsh(theta)?;
    let lmax = eig.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    Ok(eig.iter().filter(|v| v.abs() <= RANK_TOL * lmax).count())
}

/// Whether a dense Laplacian has exactly one zero eigenvalue.
pub fn is_connected_spectral(theta: &Array2<f64>) -> Result<bool> {
    Ok(zero_eigenvalue_count(theta)? == 1)
}

/// Laplacian of a symmetric nonnegative weight matrix with zero diagonal.
pub fn laplacian_from_weights(weights: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, m) = weights.dim();
    if n != m {
        return Err(Error::DimensionMismatch(format!("weight matrix is {n}x{m}")));
    }
    for i in 0..n {
        if weights[[i, i]] != 0.0 {
            return Err(Error::InvalidParameter(format!("nonzero diagonal weight at node {i}")));
        }
        for j in 0..n {
            let w = weights[[i, j]];
            if w < 0.0 {
                return Err(Error::NegativeWeight { row: i, col: j, weight: w });
            }
            if w != weights[[j, i]] {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let mut theta = weights.mapv(|w| -w);
    for i in 0..n {
        theta[[i, i]] = weights.row(i).sum();
    }
    Ok(theta)
}

/// `Θ_c = CᵀΘC` for a binary loading matrix.
pub fn coarsen_laplacian<T: SymmetricOperator + ?Sized>(
    theta: &T,
    c: &LoadingMatrix,
) -> Result<Array2<f64>> {
    c.require_binary()?;
    check_rows(theta.dim(), c)?;
    Ok(congruence(theta, c.entries().view()))
}

/// `CᵀΘC` for any `p × k` matrix, symmetrized exactly.
pub fn congruence<T: SymmetricOperator + ?Sized>(theta: &T, c: ArrayView2<f64>) -> Array2<f64> {
    let mut out = c.t().dot(&theta.apply(c));
    symmetrize(&mut out);
    out
}

/// `P = (CᵀC)⁻¹Cᵀ` for a binary loading matrix.
pub fn coarsening_matrix(c: &LoadingMatrix) -> Result<Array2<f64>> {
    let assignment = c.require_binary()?;
    let sizes = c.group_sizes().expect("binary form has sizes");
    let mut p_mat = Array2::zeros((c.k(), c.p()));
    for (i, &j) in assignment.iter().enumerate() {
        p_mat[[j, i]] = 1.0 / sizes[j] as f64;
    }
    Ok(p_mat)
}

/// `X̃ = P X`, the per-supernode mean of the feature rows.
pub fn coarsen_features(x: ArrayView2<f64>, c: &LoadingMatrix) -> Result<Array2<f64>> {
    if x.nrows() != c.p() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, loading matrix has {}",
            x.nrows(),
            c.p()
        )));
    }
    Ok(coarsening_matrix(c)?.dot(&x))
}

/// `Θ_lift = PᵀΘ_cP`.
pub fn lift_laplacian(theta_c: ArrayView2<f64>, c: &LoadingMatrix) -> Result<Array2<f64>> {
    let assignment = c.require_binary()?;
    let k = c.k();
    if theta_c.dim() != (k, k) {
        return Err(Error::DimensionMismatch(format!(
            "coarse Laplacian is {:?}, loading matrix has {k} columns",
            theta_c.dim()
        )));
    }
    let sizes = c.group_sizes().expect("binary form has sizes");
    let p = c.p();
    let mut lifted = Array2::zeros((p, p));
    for i in 0..p {
        let a = assignment[i];
        for j in 0..p {
            let b = assignment[j];
            lifted[[i, j]] = theta_c[[a, b]] / (sizes[a] * sizes[b]) as f64;
        }
    }
    Ok(lifted)
}

/// Outcome of rounding a relaxed loading matrix.
#[derive(Debug, Clone)]
pub struct RoundedLoading {
    pub loading: LoadingMatrix,
    /// Columns of the relaxed matrix that received no node and were removed.
    pub dropped_columns: Vec<usize>,
}

/// Rounds each row to its largest entry (lowest index on ties) and drops empty columns.
pub fn round_loading(c_relaxed: ArrayView2<f64>) -> Result<RoundedLoading> {
    let (p, k) = c_relaxed.dim();
    let mut argmax = Vec::with_capacity(p);
    for (i, row) in c_relaxed.rows().into_iter().enumerate() {
        let mut best = None::<(usize, f64)>;
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidLoading(format!("entry ({i}, {j}) = {v} is negative")));
            }
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        let (j, _) = best.ok_or(Error::ZeroRow { row: i })?;
        argmax.push(j);
    }
    let mut used = vec![false; k];
    for &j in &argmax {
        used[j] = true;
    }
    let mut remap = vec![usize::MAX; k];
    let mut dropped_columns = Vec::new();
    let mut next = 0;
    for j in 0..k {
        if used[j] {
            remap[j] = next;
            next += 1;
        } else {
            dropped_columns.push(j);
        }
    }
    let assignment: Vec<usize> = argmax.iter().map(|&j| remap[j]).collect();
    Ok(RoundedLoading { loading: LoadingMatrix::from_assignment(&assignment, next)?, dropped_columns })
}

fn check_rows(p: usize, c: &LoadingMatrix) -> Result<()> {
    if c.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "Laplacian has {p} nodes, loading matrix has {} rows",
            c.p()
        )));
    }
    Ok(())
}
