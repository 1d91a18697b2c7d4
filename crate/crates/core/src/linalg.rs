//! Sparse Laplacian storage and the dense kernels shared by solvers and metrics.

use std::borrow::Cow;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Cholesky, Diag, Eigh, EigValsh, SolveTriangular, UPLO};

use crate::error::{Error, Result};

/// Symmetric matrices that can multiply a dense block and expose a dense copy.
pub trait SymmetricOperator {
    /// Number of rows (and columns).
    fn dim(&self) -> usize;
    /// Computes `self · x` for a dense `dim × m` block.
    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64>;
    /// Dense representation of the operator.
    fn dense(&self) -> Cow<'_, Array2<f64>>;
    /// Squared Frobenius norm.
    fn frobenius_sq(&self) -> f64;
}

impl SymmetricOperator for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.dot(&x)
    }

    fn dense(&self) -> Cow<'_, Array2<f64>> {
        Cow::Borrowed(self)
    }

    fn frobenius_sq(&self) -> f64 {
        self.iter().map(|v| v * v).sum()
    }
}

/// Graph Laplacian in compressed sparse row form.
///
/// Every row stores its diagonal entry followed by the nonzero off-diagonals
/// in increasing column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Laplacian {
    /// Builds the Laplacian of an undirected weighted graph.
    ///
    /// Each `(i, j, w)` adds weight `w > 0` between distinct nodes `i` and `j`;
    /// repeated pairs accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at node {i}")));
            }
            if !(w.is_finite() && w > 0.0) {
                if w < 0.0 {
                    return Err(Error::NegativeWeight { row: i, col: j, weight: w });
                }
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) has non-positive or non-finite weight {w}"
                )));
            }
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, w) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            let degree: f64 = merged.iter().map(|&(_, w)| w).sum();
            indices.push(i);
            data.push(degree);
            for (j, w) in merged {
                indices.push(j);
                data.push(-w);
            }
            indptr.push(indices.len());
        }
        Ok(Self { n, indptr, indices, data })
    }

    /// Converts a dense matrix after checking the Laplacian invariants.
    pub fn from_dense(theta: ArrayView2<f64>) -> Result<Self> {
        crate::graph::validate_laplacian(theta)?;
        let n = theta.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for i in 0..n {
            indices.push(i);
            data.push(theta[[i, i]]);
            for j in 0..n {
                if j != i && theta[[i, j]] != 0.0 {
                    indices.push(j);
                    data.push(theta[[i, j]]);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { n, indptr, indices, data })
    }

    /// Node count.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        (self.indices.len() - self.n) / 2
    }

    /// Diagonal entries (weighted degrees).
    pub fn diagonal(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n).map(|i| self.data[self.indptr[i]]))
    }

    /// Off-diagonal neighbours of node `i` with positive edge weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i] + 1..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .zip(&self.data[range])
            .map(|(&j, &v)| (j, -v))
    }

    /// Undirected edge list `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Whether `i` and `j` share an edge.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let range = self.indptr[i] + 1..self.indptr[i + 1];
        self.indices[range].binary_search(&j).is_ok()
    }

    /// Dense copy.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for idx in self.indptr[i]..self.indptr[i + 1] {
                out[[i, self.indices[idx]]] = self.data[idx];
            }
        }
        out
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        count
    }
}

impl SymmetricOperator for Laplacian {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "operand row count must match the Laplacian");
        let mut out = Array2::zeros((self.n, x.ncols()));
        for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for idx in self.indptr[i]..self.indptr[i + 1] {
                row.scaled_add(self.data[idx], &x.row(self.indices[idx]));
            }
        }
        out
    }

    fn dense(&self) -> Cow<'_, Array2<f64>> {
        Cow::Owned(self.to_dense())
    }

    fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Spd {
    lower: Array2<f64>,
}

impl Spd {
    /// Factors `a`, failing if it is not numerically positive definite.
    pub fn factor(a: &Array2<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite entries".into()));
        }
        let lower = a
            .cholesky(UPLO::Lower)
            .map_err(|e| Error::NotPositiveDefinite(e.to_string()))?;
        if lower.diag().iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::NotPositiveDefinite("non-positive pivot".into()));
        }
        Ok(Self { lower })
    }

    /// Natural log of the determinant.
    pub fn logdet(&self) -> f64 {
        2.0 * self.lower.diag().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        let y = self.lower.solve_triangular(UPLO::Lower, Diag::NonUnit, b)?;
        let upper = self.lower.t().to_owned();
        Ok(upper.solve_triangular(UPLO::Upper, Diag::NonUnit, &y)?)
    }

    /// Explicit inverse.
    pub fn inverse(&self) -> Result<Array2<f64>> {
        let mut inv = self.solve(&Array2::eye(self.lower.nrows()))?;
        symmetrize(&mut inv);
        Ok(inv)
    }
}

/// Replaces `a` by `(a + aᵀ) / 2`.
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn eigvalsh(a: &Array2<f64>) -> Result<Array1<f64>> {
    Ok(a.eigvalsh(UPLO::Lower)?)
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as columns.
pub fn eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    Ok(a.eigh(UPLO::Lower)?)
}

/// `tr(aᵀ b)` for equally shaped matrices.
pub fn inner(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Squared Frobenius norm.
pub fn frobenius_sq(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}
