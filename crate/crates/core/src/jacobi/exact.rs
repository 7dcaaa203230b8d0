//! Reference eigendecomposition of a dense symmetric matrix.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{FgftError, Result};
use crate::matrix::SymmetricMatrix;

/// Largest dimension accepted by the dense reference solver.
pub const MAX_EXACT_N: usize = 8192;

#[derive(Debug, Clone)]
pub struct ExactEigen {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Array2<f64>,
}

fn guard(l: &SymmetricMatrix) -> Result<DMatrix<f64>> {
    let n = l.n();
    if n > MAX_EXACT_N {
        return Err(FgftError::SizeGuard {
            n,
            limit: MAX_EXACT_N,
        });
    }
    Ok(DMatrix::from_row_slice(n, n, l.as_slice()))
}

/// Full eigendecomposition (Householder tridiagonalization and implicit QR).
pub fn exact_eigh(l: &SymmetricMatrix) -> Result<ExactEigen> {
    let n = l.n();
    let eig = guard(l)?.symmetric_eigen();
    let order = ascending_order(eig.eigenvalues.as_slice());
    let mut vectors = Array2::zeros((n, n));
    for (k, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[[i, k]] = eig.eigenvectors[(i, src)];
        }
    }
    Ok(ExactEigen {
        values: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        vectors,
    })
}

/// Eigenvalues only, ascending.
pub fn exact_eigenvalues(l: &SymmetricMatrix) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = guard(l)?.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}
