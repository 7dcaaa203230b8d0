//! Greedy diagonalization engines.
//!
//! All three engines build `U = S_1 ... S_J` by repeatedly conjugating a dense
//! working copy of `L` with the Givens rotation(s) that remove the largest
//! off-diagonal entries. Each rotation with pivot `l_pq` lowers the squared
//! off-diagonal norm by exactly `2 l_pq^2`.

mod exact;

pub use exact::{exact_eigenvalues, exact_eigh, ExactEigen, MAX_EXACT_N};

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{FgftError, Result};
use crate::givens::{
    conjugate_parallel, conjugate_symmetric, GivensRotation, ParallelFactor, RotationChain,
};
use crate::matrix::SymmetricMatrix;

/// Relative size below which an off-diagonal pivot counts as zero.
pub const DIAGONAL_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Plain truncated Jacobi with a full argmax scan per rotation.
    Sequential,
    /// Truncated Jacobi with cached per-row maxima.
    SequentialEfficient,
    /// Batches of up to `n / 2` disjoint rotations per factor.
    Parallel,
}

impl Engine {
    pub fn run(self, l: &SymmetricMatrix, j: usize) -> ApproxDiagonalization {
        match self {
            Engine::Sequential => truncated_jacobi(l, j),
            Engine::SequentialEfficient => truncated_jacobi_efficient(l, j),
            Engine::Parallel => parallel_truncated_jacobi(l, j),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::Sequential => "sequential",
            Engine::SequentialEfficient => "sequential-efficient",
            Engine::Parallel => "parallel",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = FgftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" | "givens" => Ok(Engine::Sequential),
            "sequential-efficient" | "efficient" => Ok(Engine::SequentialEfficient),
            "parallel" | "givens//" => Ok(Engine::Parallel),
            other => Err(FgftError::InvalidParameter(format!(
                "unknown engine `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Output of a truncated diagonalization: `L ~ U diag(lambda_hat) U^T` where
/// column `k` of `U` is column `perm[k]` of the rotation chain product.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxDiagonalization {
    pub chain: RotationChain,
    /// Estimated eigenvalues, ascending.
    pub lambda_hat: Vec<f64>,
    /// `perm[k]` is the chain column holding the `k`-th smallest eigenvalue.
    pub perm: Vec<usize>,
    /// Squared off-diagonal norm of the final working matrix.
    pub residual_offdiag_sq: f64,
    /// Set when the working matrix became diagonal before the budget ran out.
    pub early_stopped: bool,
}

impl ApproxDiagonalization {
    pub fn n(&self) -> usize {
        self.chain.n()
    }

    fn finish(chain: RotationChain, work: &SymmetricMatrix, early_stopped: bool) -> Self {
        let diag = work.diagonal();
        let mut perm: Vec<usize> = (0..diag.len()).collect();
        perm.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
        let lambda_hat = perm.iter().map(|&k| diag[k]).collect();
        Self {
            chain,
            lambda_hat,
            perm,
            residual_offdiag_sq: work.offdiag_sq(),
            early_stopped,
        }
    }
}

/// Angle `theta = 1/2 arctan((l_qq - l_pp) / (2 l_pq)) + pi/4` that zeroes
/// `l_pq`. Written with `atan2` on a non-negative denominator so `l_pq = 0`
/// takes the limiting value instead of dividing by zero.
pub fn pivot_angle(app: f64, aqq: f64, apq: f64) -> f64 {
    let sign = if apq < 0.0 { -1.0 } else { 1.0 };
    0.5 * ((aqq - app) * sign).atan2(2.0 * apq.abs()) + FRAC_PI_4
}

fn pivot_rotation(l: &SymmetricMatrix, p: usize, q: usize) -> GivensRotation {
    let theta = pivot_angle(l.get(p, p), l.get(q, q), l.get(p, q));
    let (s, c) = theta.sin_cos();
    GivensRotation { p, q, c, s }
}

/// Solves one greedy subproblem: the rotation on the largest off-diagonal
/// entry (first in row-major order on ties) that annihilates it.
pub fn best_rotation(l: &SymmetricMatrix) -> Result<GivensRotation> {
    let tol = DIAGONAL_TOLERANCE * l.frobenius();
    match l.max_offdiag() {
        Some((p, q, v)) if v > tol => Ok(pivot_rotation(l, p, q)),
        _ => Err(FgftError::AlreadyDiagonal),
    }
}

/// Truncated Jacobi with a full argmax scan per step.
pub fn truncated_jacobi(l: &SymmetricMatrix, j: usize) -> ApproxDiagonalization {
    let n = l.n();
    let mut work = l.clone();
    let tol = DIAGONAL_TOLERANCE * l.frobenius();
    let mut rotations = Vec::with_capacity(j);
    let mut early = false;
    for _ in 0..j {
        match work.max_offdiag() {
            Some((p, q, v)) if v > tol => {
                let g = pivot_rotation(&work, p, q);
                conjugate_symmetric(&mut work, &g).expect("pivot indices are in range");
                rotations.push(g);
            }
            _ => {
                early = true;
                break;
            }
        }
    }
    let chain = RotationChain::sequential(n, rotations).expect("pivot indices are in range");
    ApproxDiagonalization::finish(chain, &work, early)
}

/// Work counters from [`truncated_jacobi_efficient_traced`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EfficientTrace {
    /// Matrix entries (and row maxima) examined at each step.
    pub ops_per_step: Vec<usize>,
    /// Rows rescanned because their cached argmax was invalidated.
    pub rescans_per_step: Vec<usize>,
}

/// Row maxima over the strict upper triangle, with first-index argmax.
struct RowMaxima {
    value: Vec<f64>,
    arg: Vec<usize>,
}

impl RowMaxima {
    fn new(l: &SymmetricMatrix) -> Self {
        let n = l.n();
        let mut m = Self {
            value: vec![f64::NEG_INFINITY; n],
            arg: vec![usize::MAX; n],
        };
        for r in 0..n {
            m.rescan(l, r);
        }
        m
    }

    fn rescan(&mut self, l: &SymmetricMatrix, r: usize) -> usize {
        let row = l.row(r);
        let mut best = f64::NEG_INFINITY;
        let mut arg = usize::MAX;
        for (s, v) in row.iter().enumerate().skip(r + 1) {
            let a = v.abs();
            if a > best {
                best = a;
                arg = s;
            }
        }
        self.value[r] = best;
        self.arg[r] = arg;
        row.len().saturating_sub(r + 1)
    }

    /// First row holding the global maximum.
    fn top(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (r, &v) in self.value.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ if v == f64::NEG_INFINITY => {}
                _ => best = Some((r, v)),
            }
        }
        best
    }
}

/// Truncated Jacobi that caches the maximum of every row of the strict
/// upper triangle, so only rows and columns `p` and `q` are revisited after a
/// rotation. Emits exactly the same rotations as [`truncated_jacobi`].
pub fn truncated_jacobi_efficient(l: &SymmetricMatrix, j: usize) -> ApproxDiagonalization {
    truncated_jacobi_efficient_traced(l, j).0
}

pub fn truncated_jacobi_efficient_traced(
    l: &SymmetricMatrix,
    j: usize,
) -> (ApproxDiagonalization, EfficientTrace) {
    let n = l.n();
    let mut work = l.clone();
    let tol = DIAGONAL_TOLERANCE * l.frobenius();
    let mut maxima = RowMaxima::new(&work);
    let mut trace = EfficientTrace::default();
    let mut rotations = Vec::with_capacity(j);
    let mut early = false;

    for _ in 0..j {
        let mut ops = n;
        let mut rescans = 0;
        let p = match maxima.top() {
            Some((p, v)) if v > tol => p,
            _ => {
                early = true;
                break;
            }
        };
        let q = maxima.arg[p];
        let g = pivot_rotation(&work, p, q);
        conjugate_symmetric(&mut work, &g).expect("pivot indices are in range");
        rotations.push(g);

        ops += maxima.rescan(&work, p);
        ops += maxima.rescan(&work, q);
        for s in [p, q] {
            for r in 0..s {
                ops += 1;
                let a = work.get(r, s).abs();
                let cur = maxima.value[r];
                if a > cur || (a == cur && s < maxima.arg[r]) {
                    maxima.value[r] = a;
                    maxima.arg[r] = s;
                } else if maxima.arg[r] == s {
                    ops += maxima.rescan(&work, r);
                    rescans += 1;
                }
            }
        }
        trace.ops_per_step.push(ops);
        trace.rescans_per_step.push(rescans);
    }
    let chain = RotationChain::sequential(n, rotations).expect("pivot indices are in range");
    (ApproxDiagonalization::finish(chain, &work, early), trace)
}

/// Number of parallel factors for a budget of `j` rotations: `ceil(2j / n)`.
pub fn parallel_factor_count(n: usize, j: usize) -> usize {
    if n < 2 {
        0
    } else {
        (2 * j).div_ceil(n)
    }
}

#[derive(Clone, Copy)]
struct Pivot {
    mag: f64,
    r: u32,
    s: u32,
}

/// Descending magnitude, then row-major position.
fn pivot_order(a: &Pivot, b: &Pivot) -> Ordering {
    b.mag
        .total_cmp(&a.mag)
        .then(a.r.cmp(&b.r))
        .then(a.s.cmp(&b.s))
}

/// Greedy disjoint pivot selection over the magnitude-sorted off-diagonal
/// entries.
fn select_disjoint_pivots(work: &SymmetricMatrix, tol: f64) -> Vec<(usize, usize)> {
    let n = work.n();
    let want = n / 2;
    let mut entries: Vec<Pivot> = Vec::new();
    for r in 0..n {
        for (s, v) in work.row(r).iter().enumerate().skip(r + 1) {
            let mag = v.abs();
            if mag > tol {
                entries.push(Pivot {
                    mag,
                    r: r as u32,
                    s: s as u32,
                });
            }
        }
    }

    // Sort and consume successively larger chunks of the order; the greedy
    // pass continues across chunks, so picks match a single full sort.
    let mut used = vec![false; n];
    let mut picks = Vec::with_capacity(want);
    let mut start = 0;
    let mut chunk = 4 * n.max(1);
    while start < entries.len() && picks.len() < want {
        let rest = &mut entries[start..];
        let take = chunk.min(rest.len());
        if take < rest.len() {
            rest.select_nth_unstable_by(take, pivot_order);
        }
        let head = &mut rest[..take];
        head.sort_unstable_by(pivot_order);
        for e in head.iter() {
            let (r, s) = (e.r as usize, e.s as usize);
            if !used[r] && !used[s] {
                used[r] = true;
                used[s] = true;
                picks.push((r, s));
                if picks.len() == want {
                    break;
                }
            }
        }
        start += take;
        chunk *= 4;
    }
    picks
}

/// Parallel truncated Jacobi: `ceil(2J / n)` factors, each made of up to
/// `n / 2` rotations on disjoint index pairs chosen greedily from the largest
/// off-diagonal entries. All angles of a factor are computed from the same
/// working matrix before any is applied.
pub fn parallel_truncated_jacobi(l: &SymmetricMatrix, j: usize) -> ApproxDiagonalization {
    let n = l.n();
    let mut work = l.clone();
    let tol = DIAGONAL_TOLERANCE * l.frobenius();
    let k = parallel_factor_count(n, j);
    let mut factors = Vec::with_capacity(k);
    let mut early = false;
    for _ in 0..k {
        let picks = select_disjoint_pivots(&work, tol);
        if picks.is_empty() {
            early = true;
            break;
        }
        let rotations: Vec<GivensRotation> = picks
            .iter()
            .map(|&(p, q)| pivot_rotation(&work, p, q))
            .collect();
        let factor = ParallelFactor::new(rotations, n).expect("picks are disjoint");
        conjugate_parallel(&mut work, &factor).expect("pivot indices are in range");
        factors.push(factor);
    }
    let chain = RotationChain::parallel(n, factors).expect("pivot indices are in range");
    ApproxDiagonalization::finish(chain, &work, early)
}
