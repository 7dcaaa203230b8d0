//! Dense symmetric working matrices and the sparse Laplacian used for
//! polynomial filtering.

use ndarray::{Array2, ArrayView2};

use crate::error::{FgftError, Result};
use crate::graph::Graph;

/// Dense symmetric `n x n` matrix stored row-major.
///
/// Every mutation goes through methods that write both triangles from one
/// computed value, so `a[i][j] == a[j][i]` holds bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.n + i] = d;
        }
        m
    }

    /// Builds from row-major data, checking symmetry to `1e-12 * max(1, ||A||_F)`.
    /// The upper triangle wins where the two triangles differ by rounding.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(FgftError::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        let frob = data.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = 1e-12 * frob.max(1.0);
        let mut m = Self { n, data };
        for i in 0..n {
            for j in (i + 1)..n {
                let upper = m.data[i * n + j];
                let lower = m.data[j * n + i];
                if (upper - lower).abs() > tol || !upper.is_finite() {
                    return Err(FgftError::InvalidParameter(format!(
                        "matrix is not symmetric at ({i}, {j}): {upper} vs {lower}"
                    )));
                }
                m.data[j * n + i] = upper;
            }
        }
        Ok(m)
    }

    pub fn from_array(a: ArrayView2<'_, f64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(FgftError::DimensionMismatch {
                expected: rows,
                actual: cols,
            });
        }
        Self::from_row_major(rows, a.iter().copied().collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets `a[i][j]` and `a[j][i]`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.n, self.n), &self.data).expect("square storage")
    }

    pub fn to_array(&self) -> Array2<f64> {
        self.view().to_owned()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// Sum of squared off-diagonal entries.
    pub fn offdiag_sq(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = self.row(i);
            acc += row[i + 1..].iter().map(|v| v * v).sum::<f64>();
        }
        2.0 * acc
    }

    pub fn offdiag_norm(&self) -> f64 {
        self.offdiag_sq().sqrt()
    }

    /// Largest off-diagonal magnitude with its position, first in row-major
    /// order over the strict upper triangle. `None` when `n < 2`.
    pub fn max_offdiag(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for r in 0..self.n {
            let row = self.row(r);
            for (s, v) in row.iter().enumerate().skip(r + 1) {
                let a = v.abs();
                match best {
                    Some((_, _, b)) if a <= b => {}
                    _ => best = Some((r, s, a)),
                }
            }
        }
        best
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| ((i + 1)..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Combinatorial Laplacian in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct SparseLaplacian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseLaplacian {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.n();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut degree = vec![0.0; n];
        for e in g.edges() {
            rows[e.i].push((e.j, -e.w));
            rows[e.j].push((e.i, -e.w));
            degree[e.i] += e.w;
            degree[e.j] += e.w;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            if degree[i] != 0.0 {
                row.push((i, degree[i]));
            }
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored non-zeros, the `||L||_0` of the cost model.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mat_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.cols[range.clone()]
                .iter()
                .zip(&self.vals[range])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mat_vec_into(x, &mut out);
        out
    }

    pub fn to_dense(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m.set(i, self.cols[k], self.vals[k]);
            }
        }
        m
    }
}
