//! Spectral graph filters applied exactly, through an FGFT, or as a
//! Chebyshev polynomial in `L`.

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{FgftError, Result};
use crate::jacobi::ExactEigen;
use crate::matrix::SparseLaplacian;
use crate::metrics::snr_db;
use crate::transform::Fgft;

/// A frequency response. Ideal low-pass and tabulated gains are indexed by
/// eigenvalue rank (ascending); the exponential response by value.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    /// Gain 1 on the `cut` lowest frequencies, 0 above.
    IdealLowpass { cut: usize },
    /// `h(lambda) = exp(-rate * lambda)`.
    Exponential { rate: f64 },
    /// One gain per frequency, ascending.
    Tabulated(Vec<f64>),
}

impl FilterSpec {
    /// Per-frequency gains for an ascending spectrum.
    pub fn gains(&self, lambdas: &[f64]) -> Result<Vec<f64>> {
        let n = lambdas.len();
        match self {
            FilterSpec::IdealLowpass { cut } => {
                if *cut > n {
                    return Err(FgftError::InvalidParameter(format!(
                        "low-pass cut {cut} exceeds dimension {n}"
                    )));
                }
                Ok((0..n).map(|i| if i < *cut { 1.0 } else { 0.0 }).collect())
            }
            FilterSpec::Exponential { rate } => {
                if !rate.is_finite() {
                    return Err(FgftError::InvalidParameter(format!("rate {rate}")));
                }
                Ok(lambdas.iter().map(|l| (-rate * l).exp()).collect())
            }
            FilterSpec::Tabulated(h) => {
                if h.len() != n {
                    return Err(FgftError::DimensionMismatch {
                        expected: n,
                        actual: h.len(),
                    });
                }
                if h.iter().any(|v| !v.is_finite()) {
                    return Err(FgftError::InvalidParameter("non-finite gain".into()));
                }
                Ok(h.clone())
            }
        }
    }

    /// Continuous response for polynomial fitting, given the exact ascending
    /// spectrum. The low-pass step sits halfway between the last passed and
    /// the first stopped eigenvalue; tabulated gains are interpolated linearly.
    pub fn response(&self, lambdas: &[f64]) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        let gains = self.gains(lambdas)?;
        let n = lambdas.len();
        Ok(match self {
            FilterSpec::IdealLowpass { cut } => {
                let cut = *cut;
                if cut == 0 {
                    Box::new(|_| 0.0)
                } else if cut == n {
                    Box::new(|_| 1.0)
                } else {
                    let edge = 0.5 * (lambdas[cut - 1] + lambdas[cut]);
                    Box::new(move |l| if l < edge { 1.0 } else { 0.0 })
                }
            }
            FilterSpec::Exponential { rate } => {
                let rate = *rate;
                Box::new(move |l| (-rate * l).exp())
            }
            FilterSpec::Tabulated(_) => {
                let xs = lambdas.to_vec();
                Box::new(move |l| interpolate(&xs, &gains, l))
            }
        })
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => ys[0],
        _ => {
            let i = xs.partition_point(|&v| v <= x);
            if i == 0 {
                ys[0]
            } else if i == xs.len() {
                ys[xs.len() - 1]
            } else {
                let (x0, x1) = (xs[i - 1], xs[i]);
                if x1 == x0 {
                    ys[i]
                } else {
                    ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
                }
            }
        }
    }
}

/// `y = U H U^T x` with the exact eigendecomposition.
pub fn filter_exact(eig: &ExactEigen, spec: &FilterSpec, x: &[f64]) -> Result<Vec<f64>> {
    let n = eig.values.len();
    if x.len() != n {
        return Err(FgftError::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let h = Array1::from(spec.gains(&eig.values)?);
    let spectrum = eig.vectors.t().dot(&Array1::from(x.to_vec())) * &h;
    Ok(eig.vectors.dot(&spectrum).to_vec())
}

/// Dense exact filter operator `U H U^T`.
pub fn filter_operator_exact(eig: &ExactEigen, spec: &FilterSpec) -> Result<Array2<f64>> {
    let h = Array1::from(spec.gains(&eig.values)?);
    let scaled = &eig.vectors * &h.view().insert_axis(ndarray::Axis(0));
    Ok(scaled.dot(&eig.vectors.t()))
}

/// `y = U_hat H U_hat^T x`, with gains indexed by the rank of `lambda_hat`.
pub fn filter_fgft(f: &Fgft, spec: &FilterSpec, x: &[f64]) -> Result<Vec<f64>> {
    let h = spec.gains(f.lambda_hat())?;
    let mut y = f.forward(x)?;
    for (v, g) in y.iter_mut().zip(&h) {
        *v *= g;
    }
    f.inverse(&y)
}

/// Polynomial response in Chebyshev form on `[0, lambda_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFilter {
    /// Chebyshev coefficients `c_0 .. c_p` of `sum c_k T_k(2 lambda / lambda_max - 1)`.
    pub cheb: Vec<f64>,
    pub lambda_max: f64,
    /// Sup-norm fit error on a dense grid of the interval.
    pub fit_residual: f64,
}

const FIT_NODES: usize = 2048;
const RESIDUAL_GRID: usize = 4001;

/// Discrete Chebyshev projection of `h` at Chebyshev–Gauss nodes, which is
/// the least-squares fit under the Chebyshev weight.
pub fn fit_poly(h: impl Fn(f64) -> f64, degree: usize, lambda_max: f64) -> Result<PolyFilter> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(FgftError::Degenerate(format!(
            "fit interval [0, {lambda_max}] is empty"
        )));
    }
    let m = FIT_NODES.max(4 * (degree + 1));
    let half = lambda_max / 2.0;
    let thetas: Vec<f64> = (0..m)
        .map(|j| std::f64::consts::PI * (j as f64 + 0.5) / m as f64)
        .collect();
    let samples: Vec<f64> = thetas.iter().map(|t| h(half * (t.cos() + 1.0))).collect();
    let cheb: Vec<f64> = (0..=degree)
        .map(|k| {
            let s: f64 = thetas
                .iter()
                .zip(&samples)
                .map(|(t, v)| v * (k as f64 * t).cos())
                .sum();
            let scale = if k == 0 { 1.0 } else { 2.0 };
            scale * s / m as f64
        })
        .collect();
    let mut pf = PolyFilter {
        cheb,
        lambda_max,
        fit_residual: 0.0,
    };
    pf.fit_residual = (0..RESIDUAL_GRID)
        .map(|i| {
            let l = lambda_max * i as f64 / (RESIDUAL_GRID - 1) as f64;
            (pf.eval(l) - h(l)).abs()
        })
        .fold(0.0, f64::max);
    Ok(pf)
}

impl PolyFilter {
    pub fn degree(&self) -> usize {
        self.cheb.len().saturating_sub(1)
    }

    /// Clenshaw evaluation at `lambda`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let t = 2.0 * lambda / self.lambda_max - 1.0;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.cheb.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        self.cheb.first().copied().unwrap_or(0.0) + t * b1 - b2
    }

    /// Monomial coefficients `alpha_i` of `sum alpha_i lambda^i`. Ill
    /// conditioned for large degrees; [`apply_poly`] uses the recurrence.
    pub fn monomial_coeffs(&self) -> Vec<f64> {
        let p = self.cheb.len();
        let mut out = vec![0.0; p.max(1)];
        // T_k as polynomials in t, then substitute t = a lambda - 1.
        let mut t_prev = vec![1.0];
        let mut t_cur = vec![0.0, 1.0];
        let mut in_t = vec![0.0; p.max(1)];
        for (k, &c) in self.cheb.iter().enumerate() {
            let tk: &[f64] = match k {
                0 => &t_prev,
                _ => &t_cur,
            };
            for (i, v) in tk.iter().enumerate() {
                in_t[i] += c * v;
            }
            if k >= 1 {
                let mut next = vec![0.0; t_cur.len() + 1];
                for (i, v) in t_cur.iter().enumerate() {
                    next[i + 1] += 2.0 * v;
                }
                for (i, v) in t_prev.iter().enumerate() {
                    next[i] -= v;
                }
                t_prev = std::mem::replace(&mut t_cur, next);
            }
        }
        let a = 2.0 / self.lambda_max;
        // (a lambda - 1)^i expanded binomially.
        for (i, &ci) in in_t.iter().enumerate() {
            let mut binom = 1.0;
            for (j, o) in out.iter_mut().enumerate().take(i + 1) {
                let term = binom * a.powi(j as i32) * (-1f64).powi((i - j) as i32);
                *o += ci * term;
                binom = binom * (i - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}

/// `sum_k c_k T_k(L~) x` with `L~ = (2 / lambda_max) L - I`, using `p`
/// sparse products.
pub fn apply_poly(l: &SparseLaplacian, pf: &PolyFilter, x: &[f64]) -> Result<Vec<f64>> {
    let n = l.n();
    if x.len() != n {
        return Err(FgftError::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let a = 2.0 / pf.lambda_max;
    let shifted = |v: &[f64], out: &mut [f64]| {
        l.mat_vec_into(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = a * *o - vi;
        }
    };
    let mut y: Vec<f64> = x
        .iter()
        .map(|v| pf.cheb.first().copied().unwrap_or(0.0) * v)
        .collect();
    if pf.cheb.len() < 2 {
        return Ok(y);
    }
    let mut prev = x.to_vec();
    let mut cur = vec![0.0; n];
    shifted(&prev, &mut cur);
    let mut next = vec![0.0; n];
    for (k, &c) in pf.cheb.iter().enumerate().skip(1) {
        if k > 1 {
            shifted(&cur, &mut next);
            for (nv, pv) in next.iter_mut().zip(&prev) {
                *nv = 2.0 * *nv - pv;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        for (yi, ci) in y.iter_mut().zip(&cur) {
            *yi += c * ci;
        }
    }
    Ok(y)
}

/// `n^2 / (p (nnz + n) + n)`.
pub fn poly_rcg(n: usize, nnz: usize, p: usize) -> f64 {
    let n = n as f64;
    n * n / (p as f64 * (nnz as f64 + n) + n)
}

/// Degree whose [`poly_rcg`] is closest to `rcg`.
pub fn poly_degree_for_rcg(n: usize, nnz: usize, rcg: f64) -> usize {
    let nf = n as f64;
    ((nf * nf / rcg - nf) / (nnz as f64 + nf)).round().max(0.0) as usize
}

/// `||G - G_hat||_F / ||G||_F`, where `G_hat` is densified column by column
/// by applying `apply` to the standard basis.
pub fn filter_op_error<F>(apply: F, g: ArrayView2<'_, f64>) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let n = g.nrows();
    if g.ncols() != n {
        return Err(FgftError::DimensionMismatch {
            expected: n,
            actual: g.ncols(),
        });
    }
    let norm_sq: f64 = g.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(FgftError::Degenerate(
            "exact filter operator is zero".into(),
        ));
    }
    let diff_sq = (0..n)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let col = apply(&e)?;
            if col.len() != n {
                return Err(FgftError::DimensionMismatch {
                    expected: n,
                    actual: col.len(),
                });
            }
            Ok(col
                .iter()
                .enumerate()
                .map(|(i, v)| (g[[i, k]] - v).powi(2))
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum::<f64>();
    Ok((diff_sq / norm_sq).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    /// Number of low frequencies carrying the signal and passed by the filter.
    pub band: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Mean SNR in dB over the trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseSummary {
    pub noisy: f64,
    pub exact: f64,
    pub poly: f64,
    pub fgft: f64,
}

/// Low-frequency denoising: the clean signal has i.i.d. standard normal
/// coefficients on the first `band` exact eigenvectors, noise is white
/// Gaussian, and each method applies the ideal low-pass of width `band`.
pub fn denoise_experiment(
    l: &SparseLaplacian,
    eig: &ExactEigen,
    cfg: &DenoiseConfig,
    poly: &PolyFilter,
    fgft: &Fgft,
) -> Result<DenoiseSummary> {
    let n = eig.values.len();
    if cfg.band > n || cfg.trials == 0 || cfg.sigma.is_nan() || cfg.sigma < 0.0 {
        return Err(FgftError::InvalidParameter(format!(
            "band {} of {n}, {} trials, sigma {}",
            cfg.band, cfg.trials, cfg.sigma
        )));
    }
    let spec = FilterSpec::IdealLowpass { cut: cfg.band };
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<[f64; 4]> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(t as u64));
            let mut y = Array1::zeros(n);
            for v in y.iter_mut().take(cfg.band) {
                *v = rng.sample(StandardNormal);
            }
            let x = eig.vectors.dot(&y).to_vec();
            let noisy: Vec<f64> = x
                .iter()
                .map(|v| v + cfg.sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Ok([
                snr_db(&noisy, &x)?,
                snr_db(&filter_exact(eig, &spec, &noisy)?, &x)?,
                snr_db(&apply_poly(l, poly, &noisy)?, &x)?,
                snr_db(&filter_fgft(fgft, &spec, &noisy)?, &x)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |i: usize| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64;
    Ok(DenoiseSummary {
        noisy: mean(0),
        exact: mean(1),
        poly: mean(2),
        fgft: mean(3),
    })
}
