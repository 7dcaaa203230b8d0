//! Benchmark harness for the synthetic experiments: graph specs, budgets,
//! per-seed runs and CSV output.
//!
//! Every CSV row carries the seed, the `git describe` of the build and a hash
//! of the configuration that produced it. Timing columns stay empty unless
//! requested, so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{FgftError, Result};
use crate::graph::{self, laplacian, Graph};
use crate::jacobi::{exact_eigenvalues, exact_eigh, Engine};
use crate::metrics::{band_energy_profile, err_c, err_d, err_s, spectral_overlap, SpectrumNorm};
use crate::transform::Fgft;

/// `git describe` of the build, or `unknown` outside a repository.
pub const GIT_DESCRIBE: &str = env!("FGFT_GIT_DESCRIBE");

/// Default bound on the dimension for which exact eigendecompositions run.
pub const DEFAULT_MAX_DENSE_N: usize = 4096;

/// Reads `FGFT_MAX_DENSE_N`, falling back to [`DEFAULT_MAX_DENSE_N`].
pub fn max_dense_n_from_env() -> usize {
    std::env::var("FGFT_MAX_DENSE_N")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_DENSE_N)
}

fn guard_dense(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(FgftError::SizeGuard { n, limit });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    ErdosRenyi {
        p: f64,
    },
    Community,
    /// `None` uses [`graph::sensor_default_threshold`].
    Sensor {
        threshold: Option<f64>,
    },
    Ring,
    Sbm {
        q: usize,
        avg_degree: f64,
        epsilon: f64,
    },
}

/// A generator family with its size, written `family:n=..,key=..`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub family: Family,
    pub n: usize,
    /// Fixed seed; when absent the caller's per-run seed is used.
    pub seed: Option<u64>,
}

impl GraphSpec {
    pub fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            seed: None,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::ErdosRenyi { .. } => "erdos",
            Family::Community => "community",
            Family::Sensor { .. } => "sensor",
            Family::Ring => "ring",
            Family::Sbm { .. } => "sbm",
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Graph> {
        let seed = self.seed.unwrap_or(seed);
        let n = self.n;
        match self.family {
            Family::ErdosRenyi { p } => graph::erdos_renyi(n, p, seed),
            Family::Community => graph::community(n, seed),
            Family::Sensor { threshold } => graph::sensor(
                n,
                threshold.unwrap_or_else(|| graph::sensor_default_threshold(n)),
                seed,
            ),
            Family::Ring => graph::ring(n),
            Family::Sbm {
                q,
                avg_degree,
                epsilon,
            } => graph::sbm(n, q, avg_degree, epsilon, seed),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:n={}", self.family_name(), self.n)?;
        match self.family {
            Family::ErdosRenyi { p } => write!(f, ",p={p}")?,
            Family::Sensor { threshold: Some(t) } => write!(f, ",threshold={t}")?,
            Family::Sbm {
                q,
                avg_degree,
                epsilon,
            } => write!(f, ",q={q},d={avg_degree},eps={epsilon}")?,
            _ => {}
        }
        if let Some(s) = self.seed {
            write!(f, ",seed={s}")?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| FgftError::InvalidParameter(format!("bad value `{value}` for `{key}`")))
}

impl FromStr for GraphSpec {
    type Err = FgftError;

    /// Parses `ring:n=64`, `sensor:n=256,threshold=0.1,seed=3`,
    /// `community:n=512`, `erdos:n=128,p=0.1` or
    /// `sbm:n=1000,q=20,d=8,eps=0.01` (or `eps_frac=10` for `eps_c / 10`).
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params: BTreeMap<&str, &str> = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                FgftError::InvalidParameter(format!("expected key=value, got `{part}`"))
            })?;
            params.insert(k.trim(), v.trim());
        }
        let mut take = |key: &str| params.remove(key);
        let n: usize = match take("n") {
            Some(v) => parse_value("n", v)?,
            None => return Err(FgftError::InvalidParameter(format!("`{s}` is missing n="))),
        };
        let seed = take("seed").map(|v| parse_value("seed", v)).transpose()?;
        let family = match name.trim() {
            "erdos" | "erdos-renyi" | "er" => Family::ErdosRenyi {
                p: take("p")
                    .map(|v| parse_value("p", v))
                    .transpose()?
                    .unwrap_or(0.1),
            },
            "community" => Family::Community,
            "sensor" => Family::Sensor {
                threshold: take("threshold")
                    .map(|v| parse_value("threshold", v))
                    .transpose()?,
            },
            "ring" => Family::Ring,
            "sbm" => {
                let q = take("q")
                    .map(|v| parse_value("q", v))
                    .transpose()?
                    .unwrap_or(20);
                let d: f64 = take("d")
                    .map(|v| parse_value("d", v))
                    .transpose()?
                    .unwrap_or(8.0);
                let eps = match (take("eps"), take("eps_frac")) {
                    (Some(e), None) => parse_value("eps", e)?,
                    (None, Some(frac)) => {
                        graph::sbm_epsilon_c(d, q) / parse_value::<f64>("eps_frac", frac)?
                    }
                    (None, None) => graph::sbm_epsilon_c(d, q) / 10.0,
                    (Some(_), Some(_)) => {
                        return Err(FgftError::InvalidParameter(
                            "give either eps or eps_frac, not both".into(),
                        ))
                    }
                };
                Family::Sbm {
                    q,
                    avg_degree: d,
                    epsilon: eps,
                }
            }
            other => {
                return Err(FgftError::InvalidParameter(format!(
                    "unknown graph family `{other}`"
                )))
            }
        };
        if let Some(key) = params.keys().next() {
            return Err(FgftError::InvalidParameter(format!(
                "unknown parameter `{key}` for {name}"
            )));
        }
        Ok(Self { family, n, seed })
    }
}

/// Rotation budget given directly or as a target complexity gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Rotations(usize),
    /// `J = round(n^2 / (4 RCG))`.
    Rcg(f64),
    /// `J = round(factor * n log2 n)`.
    NLogN(f64),
}

impl Budget {
    pub fn rotations(self, n: usize) -> Result<usize> {
        let nf = n as f64;
        match self {
            Budget::Rotations(j) => Ok(j),
            Budget::Rcg(r) if r > 0.0 && r.is_finite() => {
                Ok((nf * nf / (4.0 * r)).round() as usize)
            }
            Budget::NLogN(c) if c >= 0.0 && c.is_finite() => {
                Ok((c * nf * nf.max(1.0).log2()).round() as usize)
            }
            other => Err(FgftError::InvalidParameter(format!(
                "invalid budget {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Rotations(j) => write!(f, "J={j}"),
            Budget::Rcg(r) => write!(f, "RCG={r}"),
            Budget::NLogN(c) => write!(f, "J={c}nlog2n"),
        }
    }
}

/// `n^2 / (4 J)`, the complexity gain of `J` rotations.
pub fn rcg_for(n: usize, j: usize) -> f64 {
    if j == 0 {
        f64::INFINITY
    } else {
        (n as f64) * (n as f64) / (4.0 * j as f64)
    }
}

/// Parses `a..b`, `a..=b`, `a,b,c` or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || FgftError::InvalidParameter(format!("bad seed list `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        return if a <= b {
            Ok((a..=b).collect())
        } else {
            Err(bad())
        };
    }
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        return if a < b {
            Ok((a..b).collect())
        } else {
            Err(bad())
        };
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// First 16 hex digits of the SHA-256 of a canonical configuration string.
pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Shared options of all benchmark tables.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub seeds: Vec<u64>,
    pub timing: bool,
    pub max_dense_n: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            timing: false,
            max_dense_n: max_dense_n_from_env(),
        }
    }
}

fn timed<T>(timing: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    let start = Instant::now();
    let out = f();
    (out, timing.then(|| start.elapsed().as_secs_f64()))
}

/// Default complexity gain per size for the family comparison table.
pub fn table2_default_rcg(n: usize) -> f64 {
    match n {
        128 => 3.9,
        256 => 7.1,
        512 => 13.1,
        1024 => 24.4,
        _ => 0.5 * (n as f64).log2() * (n as f64).log2() / 3.0,
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Table2Row {
    pub family: String,
    pub n: usize,
    pub engine: String,
    pub seed: u64,
    /// Requested rotations; `rcg` is computed from it.
    pub budget: usize,
    /// Rotations actually emitted (fewer on early stop).
    pub rotations: usize,
    pub rcg: f64,
    /// Empty when `n` exceeds the dense size guard.
    pub err_c: Option<f64>,
    pub err_d: f64,
    pub build_seconds: Option<f64>,
    pub git: String,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct Table2Config {
    pub graphs: Vec<GraphSpec>,
    pub engines: Vec<Engine>,
    /// Budget per graph size; `None` uses [`table2_default_rcg`].
    pub budget: Option<Budget>,
}

/// Family comparison: `err_c` (after sign alignment) and `err_d` per engine.
pub fn run_table2(cfg: &Table2Config, opts: &BenchOptions) -> Result<Vec<Table2Row>> {
    let mut jobs = Vec::new();
    for spec in &cfg.graphs {
        for &seed in &opts.seeds {
            jobs.push((spec, seed));
        }
    }
    let rows: Vec<Vec<Table2Row>> = jobs
        .par_iter()
        .map(|&(spec, seed)| -> Result<Vec<Table2Row>> {
            let l = laplacian(&spec.generate(seed)?);
            let n = l.n();
            let budget = cfg.budget.unwrap_or(Budget::Rcg(table2_default_rcg(n)));
            let j = budget.rotations(n)?;
            let exact = if n <= opts.max_dense_n {
                Some(exact_eigh(&l)?)
            } else {
                None
            };
            let canonical = format!("table2|{spec}|{budget}");
            let mut out = Vec::new();
            for &engine in &cfg.engines {
                let (f, secs) = timed(opts.timing, || Fgft::build(&l, engine, j));
                let ec = match &exact {
                    Some(e) => {
                        let aligned = f.align_signs(e.vectors.view())?;
                        Some(err_c(aligned.to_dense()?.view(), e.vectors.view())?)
                    }
                    None => None,
                };
                out.push(Table2Row {
                    family: spec.family_name().to_string(),
                    n,
                    engine: engine.to_string(),
                    seed,
                    budget: j,
                    rotations: f.rotation_count(),
                    rcg: rcg_for(n, j),
                    err_c: ec,
                    err_d: err_d(&f, &l)?,
                    build_seconds: secs,
                    git: GIT_DESCRIBE.to_string(),
                    config_hash: config_hash(&format!("{canonical}|{engine}")),
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<Table2Row> = rows.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (&a.family, a.n, &a.engine, a.seed).cmp(&(&b.family, b.n, &b.engine, b.seed))
    });
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Table3Row {
    pub n: usize,
    pub q: usize,
    pub avg_degree: f64,
    /// `epsilon = eps_c / eps_divisor`.
    pub eps_divisor: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Requested rotations; `rcg` is computed from it.
    pub budget: usize,
    /// Rotations actually emitted (fewer on early stop).
    pub rotations: usize,
    pub rcg: f64,
    pub err_d: f64,
    pub err_s: Option<f64>,
    pub build_seconds: Option<f64>,
    pub git: String,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct Table3Config {
    pub n: usize,
    pub q: usize,
    pub degrees: Vec<f64>,
    pub eps_divisors: Vec<f64>,
    pub rcg: f64,
    pub engine: Engine,
}

impl Default for Table3Config {
    fn default() -> Self {
        Self {
            n: 1000,
            q: 20,
            degrees: vec![4.0, 8.0, 16.0, 32.0],
            eps_divisors: vec![100.0, 25.0, 10.0, 2.0],
            rcg: 10.0,
            engine: Engine::Parallel,
        }
    }
}

/// Structure sweep on stochastic block models.
pub fn run_table3(cfg: &Table3Config, opts: &BenchOptions) -> Result<Vec<Table3Row>> {
    let j = Budget::Rcg(cfg.rcg).rotations(cfg.n)?;
    let mut jobs = Vec::new();
    for &d in &cfg.degrees {
        for &div in &cfg.eps_divisors {
            for &seed in &opts.seeds {
                jobs.push((d, div, seed));
            }
        }
    }
    let mut rows = jobs
        .par_iter()
        .map(|&(d, div, seed)| -> Result<Table3Row> {
            let epsilon = graph::sbm_epsilon_c(d, cfg.q) / div;
            let l = laplacian(&graph::sbm(cfg.n, cfg.q, d, epsilon, seed)?);
            let (f, secs) = timed(opts.timing, || Fgft::build(&l, cfg.engine, j));
            let es = if cfg.n <= opts.max_dense_n {
                Some(err_s(
                    f.lambda_hat(),
                    &exact_eigenvalues(&l)?,
                    SpectrumNorm::Euclidean,
                )?)
            } else {
                None
            };
            let canonical = format!(
                "table3|n={}|q={}|d={d}|div={div}|rcg={}|{}",
                cfg.n, cfg.q, cfg.rcg, cfg.engine
            );
            Ok(Table3Row {
                n: cfg.n,
                q: cfg.q,
                avg_degree: d,
                eps_divisor: div,
                epsilon,
                seed,
                budget: j,
                rotations: f.rotation_count(),
                rcg: rcg_for(cfg.n, j),
                err_d: err_d(&f, &l)?,
                err_s: es,
                build_seconds: secs,
                git: GIT_DESCRIBE.to_string(),
                config_hash: config_hash(&canonical),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.avg_degree
            .total_cmp(&b.avg_degree)
            .then(b.eps_divisor.total_cmp(&a.eps_divisor))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Table4Row {
    pub n: usize,
    pub seed: u64,
    /// Requested rotations; `rcg` is computed from it.
    pub budget: usize,
    /// Rotations actually emitted (fewer on early stop).
    pub rotations: usize,
    pub rcg: f64,
    pub err_d: f64,
    pub build_seconds: Option<f64>,
    /// Dense matrix-vector time over FGFT application time.
    pub time_gain: Option<f64>,
    pub git: String,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct Table4Config {
    pub sizes: Vec<usize>,
    pub engine: Engine,
    /// Multiple of `n log2 n`.
    pub nlogn_factor: f64,
}

impl Default for Table4Config {
    fn default() -> Self {
        Self {
            sizes: vec![64, 128, 256, 512, 1024],
            engine: Engine::Parallel,
            nlogn_factor: 2.0,
        }
    }
}

/// Wall-clock ratio of a dense `U_hat x` to the FGFT forward transform.
fn measure_time_gain(f: &Fgft) -> Result<f64> {
    let n = f.n();
    let dense = f.to_dense()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let xa = ndarray::Array1::from(x.clone());
    let reps = (2_000_000 / (n * n).max(1)).clamp(3, 1000);
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(dense.t().dot(&xa));
    }
    let t_dense = start.elapsed().as_secs_f64();
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(f.forward(&x)?);
    }
    let t_fast = start.elapsed().as_secs_f64();
    Ok(t_dense / t_fast.max(1e-12))
}

/// Random sensor graphs at `J = c n log2 n`.
pub fn run_table4(cfg: &Table4Config, opts: &BenchOptions) -> Result<Vec<Table4Row>> {
    let mut jobs = Vec::new();
    for &n in &cfg.sizes {
        for &seed in &opts.seeds {
            jobs.push((n, seed));
        }
    }
    let budget = Budget::NLogN(cfg.nlogn_factor);
    let mut rows = jobs
        .par_iter()
        .map(|&(n, seed)| -> Result<Table4Row> {
            let spec = GraphSpec::new(Family::Sensor { threshold: None }, n);
            let l = laplacian(&spec.generate(seed)?);
            let j = budget.rotations(n)?;
            let (f, secs) = timed(opts.timing, || Fgft::build(&l, cfg.engine, j));
            let gain = if opts.timing && n <= opts.max_dense_n {
                Some(measure_time_gain(&f)?)
            } else {
                None
            };
            Ok(Table4Row {
                n,
                seed,
                budget: j,
                rotations: f.rotation_count(),
                rcg: rcg_for(n, j),
                err_d: err_d(&f, &l)?,
                build_seconds: secs,
                time_gain: gain,
                git: GIT_DESCRIBE.to_string(),
                config_hash: config_hash(&format!("table4|{spec}|{budget}|{}", cfg.engine)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.n, r.seed));
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EbandRow {
    pub graph: String,
    pub n: usize,
    pub seed: u64,
    /// Requested rotations; `rcg` is computed from it.
    pub budget: usize,
    /// Rotations actually emitted (fewer on early stop).
    pub rotations: usize,
    pub rcg: f64,
    pub alpha: usize,
    pub alpha_over_n: f64,
    pub energy: f64,
    pub git: String,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct EbandConfig {
    pub budgets: Vec<Budget>,
    pub engine: Engine,
    /// Sampled `alpha / n`; `alpha = n - 1` is always appended.
    pub fractions: Vec<f64>,
}

impl Default for EbandConfig {
    fn default() -> Self {
        Self {
            budgets: vec![Budget::NLogN(1.0), Budget::NLogN(2.0), Budget::NLogN(6.0)],
            engine: Engine::Parallel,
            fractions: (0..=25).map(|i| i as f64 / 100.0).collect(),
        }
    }
}

/// Band-energy curves of one graph for several budgets.
pub fn run_eband(
    label: &str,
    g: &Graph,
    seed: u64,
    cfg: &EbandConfig,
    opts: &BenchOptions,
) -> Result<Vec<EbandRow>> {
    let n = g.n();
    guard_dense(n, opts.max_dense_n)?;
    let l = laplacian(g);
    let exact = exact_eigh(&l)?;
    let mut alphas: Vec<usize> = cfg
        .fractions
        .iter()
        .map(|fr| ((fr * n as f64).round() as usize).min(n.saturating_sub(1)))
        .collect();
    alphas.push(n.saturating_sub(1));
    let per_budget = cfg
        .budgets
        .par_iter()
        .map(|&budget| -> Result<Vec<EbandRow>> {
            let j = budget.rotations(n)?;
            let f = Fgft::build(&l, cfg.engine, j);
            let overlap = spectral_overlap(&f, exact.vectors.view())?;
            let energies = band_energy_profile(overlap.view(), &alphas)?;
            let hash = config_hash(&format!("eband|{label}|{budget}|{}", cfg.engine));
            Ok(alphas
                .iter()
                .zip(energies)
                .map(|(&alpha, energy)| EbandRow {
                    graph: label.to_string(),
                    n,
                    seed,
                    budget: j,
                    rotations: f.rotation_count(),
                    rcg: rcg_for(n, j),
                    alpha,
                    alpha_over_n: alpha as f64 / n as f64,
                    energy,
                    git: GIT_DESCRIBE.to_string(),
                    config_hash: hash.clone(),
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_budget.into_iter().flatten().collect())
}

/// Writes rows with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| FgftError::io("<csv output>", e))?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| FgftError::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

/// Groups `rows` by `key` (in first-seen order) and averages `value`.
pub fn group_means<T, K: PartialEq + Clone>(
    rows: &[T],
    key: impl Fn(&T) -> K,
    value: impl Fn(&T) -> f64,
) -> Vec<(K, f64)> {
    let mut groups: Vec<(K, f64, usize)> = Vec::new();
    for r in rows {
        let k = key(r);
        let v = value(r);
        match groups.iter_mut().find(|(g, _, _)| *g == k) {
            Some(entry) => {
                entry.1 += v;
                entry.2 += 1;
            }
            None => groups.push((k, v, 1)),
        }
    }
    groups
        .into_iter()
        .map(|(k, s, c)| (k, s / c as f64))
        .collect()
}
