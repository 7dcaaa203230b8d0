//! Accuracy measures for an approximate Fourier basis.

use ndarray::{Array2, ArrayView2};

use crate::error::{FgftError, Result};
use crate::givens::{conjugate_parallel, conjugate_symmetric, Factors};
use crate::matrix::SymmetricMatrix;
use crate::transform::Fgft;

fn check_square(a: ArrayView2<'_, f64>, n: usize) -> Result<()> {
    if a.dim() != (n, n) {
        let actual = if a.nrows() != n { a.nrows() } else { a.ncols() };
        return Err(FgftError::DimensionMismatch {
            expected: n,
            actual,
        });
    }
    Ok(())
}

fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `||U - U_hat||_F / ||U||_F`. Signs are compared as given; align first.
pub fn err_c(u_hat: ArrayView2<'_, f64>, u: ArrayView2<'_, f64>) -> Result<f64> {
    check_square(u_hat, u.nrows())?;
    check_square(u, u.nrows())?;
    let denom = frobenius(u);
    if denom == 0.0 {
        return Err(FgftError::Degenerate("reference basis is zero".into()));
    }
    let diff: f64 = u
        .iter()
        .zip(u_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / denom)
}

fn laplacian_norm(l: &SymmetricMatrix) -> Result<f64> {
    let norm = l.frobenius();
    if norm == 0.0 {
        return Err(FgftError::Degenerate("Laplacian has zero norm".into()));
    }
    Ok(norm)
}

/// `||U_hat^T L U_hat||_offdiag / ||L||_F`, evaluated by conjugating `L` with
/// each rotation of the chain. Column order and signs do not change it.
pub fn err_d(f: &Fgft, l: &SymmetricMatrix) -> Result<f64> {
    if l.n() != f.n() {
        return Err(FgftError::DimensionMismatch {
            expected: f.n(),
            actual: l.n(),
        });
    }
    let norm = laplacian_norm(l)?;
    let mut work = l.clone();
    match f.chain().factors() {
        Factors::Sequential(rots) => {
            for g in rots {
                conjugate_symmetric(&mut work, g)?;
            }
        }
        Factors::Parallel(factors) => {
            for factor in factors {
                conjugate_parallel(&mut work, factor)?;
            }
        }
    }
    Ok(work.offdiag_norm() / norm)
}

/// [`err_d`] for an explicit dense basis.
pub fn err_d_dense(u_hat: ArrayView2<'_, f64>, l: &SymmetricMatrix) -> Result<f64> {
    check_square(u_hat, l.n())?;
    let norm = laplacian_norm(l)?;
    let m = u_hat.t().dot(&l.view()).dot(&u_hat);
    let mut off = 0.0;
    for ((i, j), v) in m.indexed_iter() {
        if i != j {
            off += v * v;
        }
    }
    Ok(off.sqrt() / norm)
}

/// Denominator used by [`err_s`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SpectrumNorm {
    /// Euclidean norm of the exact eigenvalue vector.
    #[default]
    Euclidean,
    /// Largest exact eigenvalue magnitude.
    Spectral,
}

/// Relative eigenvalue error with both spectra sorted ascending and paired
/// by rank.
pub fn err_s(lambda_hat: &[f64], lambda: &[f64], norm: SpectrumNorm) -> Result<f64> {
    if lambda_hat.len() != lambda.len() {
        return Err(FgftError::DimensionMismatch {
            expected: lambda.len(),
            actual: lambda_hat.len(),
        });
    }
    let denom = match norm {
        SpectrumNorm::Euclidean => lambda.iter().map(|v| v * v).sum::<f64>().sqrt(),
        SpectrumNorm::Spectral => lambda.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
    };
    if denom == 0.0 {
        return Err(FgftError::Degenerate("exact spectrum is zero".into()));
    }
    let num: f64 = lambda
        .iter()
        .zip(lambda_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(num.sqrt() / denom)
}

/// `U_hat^T U`, computed column by column through the FGFT.
pub fn spectral_overlap(f: &Fgft, u: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = f.n();
    check_square(u, n)?;
    let mut m = Array2::zeros((n, n));
    for k in 0..n {
        let col = f.forward(&u.column(k).to_vec())?;
        for (i, v) in col.into_iter().enumerate() {
            m[[i, k]] = v;
        }
    }
    Ok(m)
}

/// Band energies `(1/n) sum_{|i-j| <= alpha} m_ij^2` of an overlap matrix
/// `m = U_hat^T U` for every `alpha` in `alphas`.
pub fn band_energy_profile(overlap: ArrayView2<'_, f64>, alphas: &[usize]) -> Result<Vec<f64>> {
    let n = overlap.nrows();
    check_square(overlap, n)?;
    // Energy per diagonal offset, then prefix sums.
    let mut by_offset = vec![0.0; n.max(1)];
    for ((i, j), v) in overlap.indexed_iter() {
        by_offset[i.abs_diff(j)] += v * v;
    }
    let mut cumulative = Vec::with_capacity(by_offset.len());
    let mut acc = 0.0;
    for e in by_offset {
        acc += e;
        cumulative.push(acc);
    }
    let scale = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    Ok(alphas
        .iter()
        .map(|&a| cumulative[a.min(cumulative.len() - 1)] * scale)
        .collect())
}

/// Fraction of the energy of `U_hat^T U` within `alpha` of the diagonal.
pub fn band_energy(
    u_hat: ArrayView2<'_, f64>,
    u: ArrayView2<'_, f64>,
    alpha: usize,
) -> Result<f64> {
    check_square(u_hat, u.nrows())?;
    check_square(u, u.nrows())?;
    let m = u_hat.t().dot(&u);
    Ok(band_energy_profile(m.view(), &[alpha])?[0])
}

/// `10 log10(||x_hat||^2 / ||x - x_hat||^2)`, with the reconstruction in the
/// numerator. Returns `+inf` when `x_hat` matches `x` to `1e-12` relative.
pub fn snr_db(x_hat: &[f64], x: &[f64]) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(FgftError::DimensionMismatch {
            expected: x.len(),
            actual: x_hat.len(),
        });
    }
    let signal: f64 = x_hat.iter().map(|v| v * v).sum();
    let noise: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    if noise <= 1e-24 * signal || noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}
