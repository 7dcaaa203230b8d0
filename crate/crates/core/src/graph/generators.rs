//! Seeded synthetic graph families.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with the caller's seed, so
//! the same parameters and seed always reproduce the same graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Edge, Graph};
use crate::error::{FgftError, Result};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian kernel weight with bandwidth `threshold / 2`.
fn kernel_weight(dist: f64, threshold: f64) -> f64 {
    let sigma = threshold / 2.0;
    (-dist * dist / (2.0 * sigma * sigma)).exp()
}

/// G(n, p): every unordered pair present independently with probability `p`,
/// unit weight.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(FgftError::InvalidParameter(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut rng = rng_for(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push(Edge { i, j, w: 1.0 });
            }
        }
    }
    Ok(Graph::from_sorted_unchecked(n, edges))
}

/// Cycle on `n >= 3` vertices with unit weights.
pub fn ring(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(FgftError::InvalidParameter(format!(
            "ring needs at least 3 vertices, got {n}"
        )));
    }
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))
}

/// Radius `sqrt(2 ln n / n)`, the usual connectivity regime for random
/// geometric graphs on the unit square.
pub fn sensor_default_threshold(n: usize) -> f64 {
    let n = n.max(2) as f64;
    (2.0 * n.ln() / n).sqrt()
}

fn geometric_edges(points: &[(f64, f64)], offset: usize, threshold: f64, edges: &mut Vec<Edge>) {
    for (a, pa) in points.iter().enumerate() {
        for (b, pb) in points.iter().enumerate().skip(a + 1) {
            let dist = (pa.0 - pb.0).hypot(pa.1 - pb.1);
            if dist < threshold {
                edges.push(Edge {
                    i: offset + a,
                    j: offset + b,
                    w: kernel_weight(dist, threshold),
                });
            }
        }
    }
}

/// Random sensor network: uniform points on the unit square, joined when
/// closer than `threshold` with weight `exp(-d^2 / (2 (threshold/2)^2))`.
/// The output may be disconnected.
pub fn sensor(n: usize, threshold: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(FgftError::InvalidParameter(format!(
            "sensor graph needs at least 2 vertices, got {n}"
        )));
    }
    if threshold.is_nan() || threshold < 0.0 {
        return Err(FgftError::InvalidParameter(format!(
            "negative sensor threshold {threshold}"
        )));
    }
    let mut rng = rng_for(seed);
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let mut edges = Vec::new();
    geometric_edges(&points, 0, threshold, &mut edges);
    Ok(Graph::from_sorted_unchecked(n, edges))
}

/// Community sizes: each community gets `round(n / (3k))` vertices, the rest
/// is spread uniformly at random.
fn community_sizes(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let min_size = ((n as f64 / (3.0 * k as f64)).round() as usize).max(2);
    let mut sizes = vec![min_size; k];
    for _ in 0..(n - min_size * k) {
        sizes[rng.random_range(0..k)] += 1;
    }
    sizes
}

/// Community graph with `floor(sqrt(n) / 2)` communities of random sizes.
///
/// Each community of `m` vertices is a geometric graph on the unit disk with
/// radius `sqrt(2 sqrt(n)) / (2 sqrt(m))`, which keeps the expected
/// intra-community degree near `sqrt(n) / 2` regardless of `m`. Every pair of
/// vertices in different communities is joined with probability `1 / n`
/// (unit weight). Vertices of one community are contiguous.
pub fn community(n: usize, seed: u64) -> Result<Graph> {
    if n < 16 {
        return Err(FgftError::InvalidParameter(format!(
            "community graph needs at least 16 vertices, got {n}"
        )));
    }
    let k = ((n as f64).sqrt() / 2.0).floor() as usize;
    let mut rng = rng_for(seed);
    let sizes = community_sizes(n, k, &mut rng);

    let mut edges = Vec::new();
    let mut label = Vec::with_capacity(n);
    let mut offset = 0;
    for (c, &m) in sizes.iter().enumerate() {
        let points: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                let r = rng.random::<f64>().sqrt();
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                (r * phi.cos(), r * phi.sin())
            })
            .collect();
        let threshold = (2.0 * (n as f64).sqrt()).sqrt() / (2.0 * (m as f64).sqrt());
        geometric_edges(&points, offset, threshold, &mut edges);
        label.extend(std::iter::repeat_n(c, m));
        offset += m;
    }

    let p_cross = 1.0 / n as f64;
    for i in 0..n {
        for j in (i + 1)..n {
            if label[i] != label[j] && rng.random::<f64>() < p_cross {
                edges.push(Edge { i, j, w: 1.0 });
            }
        }
    }
    edges.sort_by_key(|e| (e.i, e.j));
    Ok(Graph::from_sorted_unchecked(n, edges))
}

/// Detectability threshold `(d - sqrt d) / (d + sqrt d (q - 1))` of a
/// symmetric SBM with `q` blocks and average degree `d`.
pub fn sbm_epsilon_c(avg_degree: f64, q: usize) -> f64 {
    let s = avg_degree.sqrt();
    (avg_degree - s) / (avg_degree + s * (q as f64 - 1.0))
}

/// Stochastic block model with `q` equal blocks, `p_out / p_in = epsilon`
/// and expected degree `avg_degree`. Blocks are contiguous vertex ranges.
pub fn sbm(n: usize, q: usize, avg_degree: f64, epsilon: f64, seed: u64) -> Result<Graph> {
    if q == 0 || !n.is_multiple_of(q) {
        return Err(FgftError::InvalidParameter(format!(
            "{q} blocks do not divide {n} vertices"
        )));
    }
    if avg_degree.is_nan() || avg_degree <= 0.0 {
        return Err(FgftError::InvalidParameter(format!(
            "average degree must be positive, got {avg_degree}"
        )));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(FgftError::InvalidParameter(format!(
            "epsilon {epsilon} outside [0, 1]"
        )));
    }
    let m = n / q;
    let p_in = avg_degree / ((m - 1) as f64 + epsilon * (n - m) as f64);
    if p_in > 1.0 || !p_in.is_finite() {
        return Err(FgftError::InvalidParameter(format!(
            "infeasible SBM: intra-block probability {p_in} exceeds 1"
        )));
    }
    let p_out = epsilon * p_in;
    let mut rng = rng_for(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if i / m == j / m { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push(Edge { i, j, w: 1.0 });
            }
        }
    }
    Ok(Graph::from_sorted_unchecked(n, edges))
}
