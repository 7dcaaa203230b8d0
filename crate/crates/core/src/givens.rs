//! Givens rotations, parallel factors of disjoint rotations, and chains of
//! either.
//!
//! Sign convention: `G(p,p) = G(q,q) = c`, `G(q,p) = s`, `G(p,q) = -s`, so
//! `G * [x_p, x_q] = [c x_p - s x_q, s x_p + c x_q]`.

use ndarray::Array2;

use crate::error::{FgftError, Result};
use crate::matrix::SymmetricMatrix;

/// Largest dimension [`RotationChain::to_dense`] will materialize.
pub const MAX_DENSE_CHAIN_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRotation {
    pub p: usize,
    pub q: usize,
    pub c: f64,
    pub s: f64,
}

impl GivensRotation {
    pub fn from_angle(p: usize, q: usize, theta: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        Self::new(p, q, c, s)
    }

    /// Requires `p < q` and `|c^2 + s^2 - 1| <= 1e-14`.
    pub fn new(p: usize, q: usize, c: f64, s: f64) -> Result<Self> {
        if p >= q {
            return Err(FgftError::InvalidParameter(format!(
                "rotation indices must satisfy p < q, got ({p}, {q})"
            )));
        }
        if (c * c + s * s - 1.0).abs() > 1e-14 {
            return Err(FgftError::InvalidParameter(format!(
                "rotation ({p}, {q}) is not orthogonal: c^2 + s^2 = {}",
                c * c + s * s
            )));
        }
        Ok(Self { p, q, c, s })
    }

    pub fn angle(&self) -> f64 {
        self.s.atan2(self.c)
    }

    #[inline]
    pub fn apply(&self, x: &mut [f64]) {
        let (xp, xq) = (x[self.p], x[self.q]);
        x[self.p] = self.c * xp - self.s * xq;
        x[self.q] = self.s * xp + self.c * xq;
    }

    #[inline]
    pub fn apply_transpose(&self, x: &mut [f64]) {
        let (xp, xq) = (x[self.p], x[self.q]);
        x[self.p] = self.c * xp + self.s * xq;
        x[self.q] = -self.s * xp + self.c * xq;
    }
}

/// Rotations with pairwise-disjoint supports, applicable in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelFactor {
    rotations: Vec<GivensRotation>,
}

impl ParallelFactor {
    pub fn new(rotations: Vec<GivensRotation>, n: usize) -> Result<Self> {
        if rotations.len() > n / 2 {
            return Err(FgftError::InvalidParameter(format!(
                "{} rotations cannot be disjoint in dimension {n}",
                rotations.len()
            )));
        }
        let mut used = vec![false; n];
        for g in &rotations {
            for idx in [g.p, g.q] {
                if idx >= n {
                    return Err(FgftError::IndexOutOfRange { index: idx, n });
                }
                if std::mem::replace(&mut used[idx], true) {
                    return Err(FgftError::InvalidParameter(format!(
                        "index {idx} appears twice in a parallel factor"
                    )));
                }
            }
        }
        Ok(Self { rotations })
    }

    pub fn rotations(&self) -> &[GivensRotation] {
        &self.rotations
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factors {
    Sequential(Vec<GivensRotation>),
    Parallel(Vec<ParallelFactor>),
}

/// Ordered product `S_1 S_2 ... S_K` of sparse orthogonal factors.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationChain {
    n: usize,
    factors: Factors,
}

impl RotationChain {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            factors: Factors::Sequential(Vec::new()),
        }
    }

    pub fn sequential(n: usize, rotations: Vec<GivensRotation>) -> Result<Self> {
        for g in &rotations {
            check_indices(g, n)?;
        }
        Ok(Self {
            n,
            factors: Factors::Sequential(rotations),
        })
    }

    pub fn parallel(n: usize, factors: Vec<ParallelFactor>) -> Result<Self> {
        for g in factors.iter().flat_map(|f| f.rotations()) {
            check_indices(g, n)?;
        }
        Ok(Self {
            n,
            factors: Factors::Parallel(factors),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> &Factors {
        &self.factors
    }

    pub fn is_parallel(&self) -> bool {
        matches!(self.factors, Factors::Parallel(_))
    }

    /// Number of stored factors: rotations for a sequential chain,
    /// parallel factors otherwise.
    pub fn factor_count(&self) -> usize {
        match &self.factors {
            Factors::Sequential(r) => r.len(),
            Factors::Parallel(f) => f.len(),
        }
    }

    pub fn rotation_count(&self) -> usize {
        match &self.factors {
            Factors::Sequential(r) => r.len(),
            Factors::Parallel(f) => f.iter().map(ParallelFactor::len).sum(),
        }
    }

    /// All rotations in product order (`S_1` first).
    pub fn rotations(&self) -> impl DoubleEndedIterator<Item = &GivensRotation> + '_ {
        let (seq, par): (&[GivensRotation], &[ParallelFactor]) = match &self.factors {
            Factors::Sequential(r) => (r, &[]),
            Factors::Parallel(f) => (&[], f),
        };
        seq.iter()
            .chain(par.iter().flat_map(|f| f.rotations().iter()))
    }

    /// `x <- (S_1...S_K) x`, or `x <- (S_1...S_K)^T x` when `transpose`.
    pub fn apply_in_place(&self, x: &mut [f64], transpose: bool) -> Result<()> {
        if x.len() != self.n {
            return Err(FgftError::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        if transpose {
            for g in self.rotations() {
                g.apply_transpose(x);
            }
        } else {
            for g in self.rotations().rev() {
                g.apply(x);
            }
        }
        Ok(())
    }

    /// Dense `n x n` product of the chain.
    pub fn to_dense(&self) -> Result<Array2<f64>> {
        if self.n > MAX_DENSE_CHAIN_N {
            return Err(FgftError::SizeGuard {
                n: self.n,
                limit: MAX_DENSE_CHAIN_N,
            });
        }
        // Accumulate U^T = S_K^T ... S_1^T with row operations, then transpose.
        let n = self.n;
        let mut t = Array2::<f64>::eye(n);
        {
            let data = t.as_slice_mut().expect("standard layout");
            for g in self.rotations() {
                let (head, tail) = data.split_at_mut(g.q * n);
                let row_p = &mut head[g.p * n..(g.p + 1) * n];
                let row_q = &mut tail[..n];
                for (a, b) in row_p.iter_mut().zip(row_q.iter_mut()) {
                    let (xp, xq) = (*a, *b);
                    *a = g.c * xp + g.s * xq;
                    *b = -g.s * xp + g.c * xq;
                }
            }
        }
        Ok(t.reversed_axes().as_standard_layout().into_owned())
    }
}

fn check_indices(g: &GivensRotation, n: usize) -> Result<()> {
    if g.q >= n {
        return Err(FgftError::IndexOutOfRange { index: g.q, n });
    }
    Ok(())
}

/// Applies the chain (or its transpose) to a copy of `x`.
pub fn rotate_vector(chain: &RotationChain, x: &[f64], transpose: bool) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    chain.apply_in_place(&mut y, transpose)?;
    Ok(y)
}

/// Four non-zeros per rotation.
pub fn chain_nnz(chain: &RotationChain) -> usize {
    4 * chain.rotation_count()
}

/// In-place similarity `L <- G^T L G`. Only rows and columns `p` and `q`
/// change, and both triangles are written from the same value.
pub fn conjugate_symmetric(l: &mut SymmetricMatrix, g: &GivensRotation) -> Result<()> {
    let n = l.n();
    if g.q >= n {
        return Err(FgftError::IndexOutOfRange { index: g.q, n });
    }
    let (p, q, c, s) = (g.p, g.q, g.c, g.s);
    let data = l.as_mut_slice();
    let app = data[p * n + p];
    let aqq = data[q * n + q];
    let apq = data[p * n + q];

    {
        let (head, tail) = data.split_at_mut(q * n);
        let row_p = &mut head[p * n..(p + 1) * n];
        let row_q = &mut tail[..n];
        for (a, b) in row_p.iter_mut().zip(row_q.iter_mut()) {
            let (xp, xq) = (*a, *b);
            *a = c * xp + s * xq;
            *b = -s * xp + c * xq;
        }
    }
    let cs = c * s;
    let new_pp = c * c * app + 2.0 * cs * apq + s * s * aqq;
    let new_qq = s * s * app - 2.0 * cs * apq + c * c * aqq;
    let new_pq = (c * c - s * s) * apq + cs * (aqq - app);
    data[p * n + p] = new_pp;
    data[q * n + q] = new_qq;
    data[p * n + q] = new_pq;
    data[q * n + p] = new_pq;
    for k in 0..n {
        if k != p && k != q {
            data[k * n + p] = data[p * n + k];
            data[k * n + q] = data[q * n + k];
        }
    }
    Ok(())
}

/// In-place similarity `L <- R^T L R` for a whole parallel factor: one pass
/// mixing row pairs, one pass mixing column pairs within each row, then the
/// strict upper triangle is mirrored so both triangles agree exactly.
pub fn conjugate_parallel(l: &mut SymmetricMatrix, factor: &ParallelFactor) -> Result<()> {
    let n = l.n();
    let rots = factor.rotations();
    if let Some(g) = rots.iter().find(|g| g.q >= n) {
        return Err(FgftError::IndexOutOfRange { index: g.q, n });
    }
    if rots.is_empty() {
        return Ok(());
    }
    let data = l.as_mut_slice();
    let blocks: Vec<(f64, f64, f64)> = rots
        .iter()
        .map(|g| {
            (
                data[g.p * n + g.p],
                data[g.q * n + g.q],
                data[g.p * n + g.q],
            )
        })
        .collect();
    for g in rots {
        let (head, tail) = data.split_at_mut(g.q * n);
        let row_p = &mut head[g.p * n..(g.p + 1) * n];
        let row_q = &mut tail[..n];
        for (a, b) in row_p.iter_mut().zip(row_q.iter_mut()) {
            let (xp, xq) = (*a, *b);
            *a = g.c * xp + g.s * xq;
            *b = -g.s * xp + g.c * xq;
        }
    }
    for row in data.chunks_exact_mut(n) {
        for g in rots {
            let (xp, xq) = (row[g.p], row[g.q]);
            row[g.p] = g.c * xp + g.s * xq;
            row[g.q] = -g.s * xp + g.c * xq;
        }
    }
    for (g, &(app, aqq, apq)) in rots.iter().zip(&blocks) {
        let (c, s) = (g.c, g.s);
        let cs = c * s;
        data[g.p * n + g.p] = c * c * app + 2.0 * cs * apq + s * s * aqq;
        data[g.q * n + g.q] = s * s * app - 2.0 * cs * apq + c * c * aqq;
        data[g.p * n + g.q] = (c * c - s * s) * apq + cs * (aqq - app);
    }
    const TILE: usize = 64;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                for j in bj.max(i + 1)..(bj + TILE).min(n) {
                    data[j * n + i] = data[i * n + j];
                }
            }
        }
    }
    Ok(())
}
