//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Runs with `harness = false` so the summary is printed even when every
//! criterion passes. Expect 15 to 20 minutes on one core.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fgft::experiments::{
    rcg_for, run_eband, table2_default_rcg, BenchOptions, Budget, EbandConfig, Family, GraphSpec,
};
use fgft::filtering::{
    apply_poly, filter_fgft, filter_op_error, filter_operator_exact, fit_poly, poly_degree_for_rcg,
    poly_rcg, FilterSpec,
};
use fgft::givens::conjugate_symmetric;
use fgft::graph::{self, load_graph, save_graph, GraphFormat};
use fgft::jacobi::{
    exact_eigenvalues, exact_eigh, truncated_jacobi, truncated_jacobi_efficient, ExactEigen,
};
use fgft::metrics::{err_d, err_s, SpectrumNorm};
use fgft::transform::{decode_fgft, encode_fgft};
use fgft::{laplacian, load_fgft, save_fgft, Engine, Fgft, SparseLaplacian, SymmetricMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix {
    let mut m = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

/// Worst round-trip and orthogonality figures over every FGFT checked.
#[derive(Default)]
struct RoundTrips {
    transforms: usize,
    worst_roundtrip: f64,
    /// max |U^T U - I| divided by n.
    worst_orthogonality: f64,
}

impl RoundTrips {
    fn check(&mut self, f: &Fgft, seed: u64) {
        let n = f.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let back = f.inverse(&f.forward(&x).unwrap()).unwrap();
            let diff: Vec<f64> = back.iter().zip(&x).map(|(a, b)| a - b).collect();
            self.worst_roundtrip = self.worst_roundtrip.max(norm(&diff) / norm(&x));
        }
        let u = f.to_dense().unwrap();
        let gram = u.t().dot(&u) - Array2::<f64>::eye(n);
        let dev = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.worst_orthogonality = self.worst_orthogonality.max(dev / n as f64);
        self.transforms += 1;
    }
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for n in [8, 16, 64] {
        let values = exact_eigenvalues(&laplacian(&graph::ring(n).unwrap())).unwrap();
        let mut analytic: Vec<f64> = (0..n)
            .map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos())
            .collect();
        analytic.sort_by(f64::total_cmp);
        for (a, b) in values.iter().zip(&analytic) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max eigenvalue error {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut steps = 0;
    for _ in 0..100 {
        let m = random_symmetric(8, &mut rng);
        let out = truncated_jacobi(&m, 28);
        let mut cur = m;
        for g in out.chain.rotations() {
            let before = cur.offdiag_sq();
            let pivot = cur.get(g.p, g.q);
            conjugate_symmetric(&mut cur, g).unwrap();
            let drop = before - cur.offdiag_sq();
            worst = worst.max((drop - 2.0 * pivot * pivot).abs() / before);
            steps += 1;
        }
    }
    outcome(
        worst <= 1e-10,
        format!("{steps} steps, max relative deviation {worst:.2e} (tol 1e-10)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..50 {
        let m = random_symmetric(12, &mut rng);
        let a = truncated_jacobi(&m, 40);
        let b = truncated_jacobi_efficient(&m, 40);
        let same = a.chain.rotation_count() == b.chain.rotation_count()
            && a.chain.rotations().zip(b.chain.rotations()).all(|(x, y)| {
                x.p == y.p && x.q == y.q && x.angle().to_bits() == y.angle().to_bits()
            });
        if !same {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} of 50 instances differ in (p, q, theta)"),
    )
}

fn criterion_4() -> Outcome {
    let expected = [
        (64, "1.33"),
        (128, "2.29"),
        (256, "4.00"),
        (512, "7.11"),
        (1024, "12.80"),
    ];
    let mut got = Vec::new();
    let mut pass = true;
    for (n, want) in expected {
        let j = Budget::NLogN(2.0).rotations(n).unwrap();
        let printed = format!("{:.2}", rcg_for(n, j));
        pass &= printed == want;
        got.push(format!("{n}:{printed}"));
    }
    outcome(pass, got.join(" "))
}

fn criterion_5(rt: &mut RoundTrips) -> Outcome {
    let mut means = Vec::new();
    for n in [64, 128, 256, 512, 1024] {
        let spec = GraphSpec::new(Family::Sensor { threshold: None }, n);
        let j = Budget::NLogN(2.0).rotations(n).unwrap();
        let errs: Vec<f64> = (0..10)
            .map(|seed| {
                let l = laplacian(&spec.generate(seed).unwrap());
                let f = Fgft::build(&l, Engine::Parallel, j);
                rt.check(&f, seed);
                err_d(&f, &l).unwrap()
            })
            .collect();
        means.push((n, mean(&errs)));
    }
    let lo = means.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let hi = means.iter().map(|m| m.1).fold(0.0, f64::max);
    let pass = lo >= 0.03 && hi <= 0.08 && hi - lo <= 0.03;
    let cells: Vec<String> = means.iter().map(|(n, m)| format!("{n}:{m:.4}")).collect();
    outcome(
        pass,
        format!("mean err_d {} range {:.4}", cells.join(" "), hi - lo),
    )
}

fn criterion_6(rt: &mut RoundTrips) -> Outcome {
    let (n, q) = (1000, 20);
    let j = Budget::Rcg(10.0).rotations(n).unwrap();
    let divisors = [100.0, 25.0, 10.0, 2.0];
    let mut pass = true;
    let mut lines = Vec::new();
    let mut spot = [0.0; 2];
    for d in [4.0, 8.0, 16.0, 32.0] {
        let mut row = Vec::new();
        for div in divisors {
            let eps = graph::sbm_epsilon_c(d, q) / div;
            let mut ed = Vec::new();
            let mut es = Vec::new();
            for seed in 0..10 {
                let l = laplacian(&graph::sbm(n, q, d, eps, seed).unwrap());
                let f = Fgft::build(&l, Engine::Parallel, j);
                ed.push(err_d(&f, &l).unwrap());
                let lambda = exact_eigenvalues(&l).unwrap();
                es.push(err_s(f.lambda_hat(), &lambda, SpectrumNorm::Euclidean).unwrap());
                rt.check(&f, seed);
            }
            let (md, ms) = (mean(&ed), mean(&es));
            pass &= ms <= md && ms <= 0.08;
            row.push((md, ms));
        }
        pass &= row.windows(2).all(|w| w[0].0 <= w[1].0);
        if d == 8.0 {
            spot = [row[0].0, row[3].0];
        }
        let cells: Vec<String> = row.iter().map(|(a, b)| format!("{a:.3}|{b:.3}")).collect();
        lines.push(format!("d={d}: {}", cells.join(" ")));
    }
    pass &= (spot[0] - 0.043).abs() <= 0.03 && (spot[1] - 0.164).abs() <= 0.05;
    outcome(pass, lines.join("; "))
}

fn criterion_7(rt: &mut RoundTrips) -> Outcome {
    let families = [
        Family::ErdosRenyi { p: 0.1 },
        Family::Community,
        Family::Sensor { threshold: None },
        Family::Ring,
    ];
    let seeds = 0..5u64;
    let mut pass = true;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_cell = String::new();
    let mut widest = (0.0f64, String::new());
    let mut spots = Vec::new();
    for family in families {
        for n in [128, 256, 512, 1024] {
            let spec = GraphSpec::new(family.clone(), n);
            let j = Budget::Rcg(table2_default_rcg(n)).rotations(n).unwrap();
            let mut seq = Vec::new();
            let mut par = Vec::new();
            for seed in seeds.clone() {
                let l = laplacian(&spec.generate(seed).unwrap());
                // Same rotations as the naive sequential engine, much faster.
                let fs = Fgft::build(&l, Engine::SequentialEfficient, j);
                let fp = Fgft::build(&l, Engine::Parallel, j);
                seq.push(err_d(&fs, &l).unwrap());
                par.push(err_d(&fp, &l).unwrap());
                rt.check(&fs, seed);
                rt.check(&fp, seed);
            }
            let (ms, mp) = (mean(&seq), mean(&par));
            let gap = ms - mp;
            pass &= gap <= 0.03;
            if mp - ms > widest.0 {
                widest = (mp - ms, spec.to_string());
            }
            if gap > worst_gap {
                worst_gap = gap;
                worst_cell = format!("{spec}");
            }
            let name = spec.family_name();
            if (name == "community" && n == 256) || (name == "ring" && n == 512) {
                let target = if n == 256 { 0.07 } else { 0.08 };
                pass &= (mp - target).abs() <= 0.05;
                spots.push(format!("{name} n={n} par {mp:.4} (seq {ms:.4})"));
            }
        }
    }
    outcome(
        pass,
        format!(
            "{}; largest seq-minus-par gap {worst_gap:.4} at {worst_cell} (tol 0.03); \
             parallel trails sequential by at most {:.4} ({})",
            spots.join(", "),
            widest.0,
            widest.1
        ),
    )
}

fn criterion_8(rt: &RoundTrips) -> Outcome {
    let pass = rt.transforms > 0 && rt.worst_roundtrip <= 1e-10 && rt.worst_orthogonality <= 1e-10;
    outcome(
        pass,
        format!(
            "{} transforms, worst round trip {:.2e}, worst |U^T U - I| / n {:.2e}",
            rt.transforms, rt.worst_roundtrip, rt.worst_orthogonality
        ),
    )
}

fn criterion_9() -> Outcome {
    let g = graph::sensor(512, graph::sensor_default_threshold(512), 0).unwrap();
    let opts = BenchOptions {
        seeds: vec![0],
        timing: false,
        max_dense_n: 512,
    };
    let cfg = EbandConfig::default();
    let rows = run_eband("sensor", &g, 0, &cfg, &opts).unwrap();
    let per = rows.len() / cfg.budgets.len();
    let curves: Vec<Vec<f64>> = rows
        .chunks(per)
        .map(|c| c.iter().map(|r| r.energy).collect())
        .collect();
    let monotone = curves
        .iter()
        .all(|c| c.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    let complete = curves.iter().all(|c| (c[per - 1] - 1.0).abs() <= 1e-10);
    let mut worst = f64::NEG_INFINITY;
    for pair in curves.windows(2) {
        for (small, large) in pair[0].iter().zip(&pair[1]) {
            worst = worst.max(small - large);
        }
    }
    let at5: Vec<String> = curves.iter().map(|c| format!("{:.3}", c[5])).collect();
    outcome(
        monotone && complete && worst <= 0.02,
        format!(
            "monotone {monotone}, E(n-1)=1 {complete}, worst domination violation {worst:.4} (slack 0.02), E at alpha/n=0.05: {}",
            at5.join(" ")
        ),
    )
}

fn fgft_operator(f: &Fgft, spec: &FilterSpec) -> Array2<f64> {
    let n = f.n();
    let mut g = Array2::zeros((n, n));
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = filter_fgft(f, spec, &e).unwrap();
        g.column_mut(k).assign(&ndarray::Array1::from(col));
        e[k] = 0.0;
    }
    g
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn criterion_10() -> Outcome {
    // (a) converged FGFT on n = 32.
    let l32 = laplacian(&graph::sensor(32, graph::sensor_default_threshold(32), 0).unwrap());
    let eig32 = exact_eigh(&l32).unwrap();
    let full = Fgft::build(&l32, Engine::Sequential, 100_000);
    let mut dev_a = 0.0f64;
    let mut specs = vec![FilterSpec::Exponential { rate: 1.0 }];
    // A low-pass cut inside a clear spectral gap, so the passband is well defined.
    if let Some(cut) = (8..24).find(|&k| eig32.values[k] - eig32.values[k - 1] > 1e-3) {
        specs.push(FilterSpec::IdealLowpass { cut });
    }
    for spec in &specs {
        let exact = filter_operator_exact(&eig32, spec).unwrap();
        dev_a = dev_a.max(max_abs_diff(&fgft_operator(&full, spec), &exact));
    }
    let pass_a = dev_a <= 1e-6;

    // (b), (c) community graph with 2048 nodes.
    let g = graph::community(2048, 0).unwrap();
    let l = laplacian(&g);
    let sparse = SparseLaplacian::from_graph(&g);
    let (n, nnz) = (l.n(), sparse.nnz());
    let eig: ExactEigen = exact_eigh(&l).unwrap();
    let lmax = *eig.values.last().unwrap();

    let heat = FilterSpec::Exponential { rate: 1.0 };
    let g_heat = filter_operator_exact(&eig, &heat).unwrap();
    let pf = fit_poly(heat.response(&eig.values).unwrap(), 14, lmax).unwrap();
    let err_b = filter_op_error(|x| apply_poly(&sparse, &pf, x), g_heat.view()).unwrap();
    let pass_b = err_b <= 0.10;

    let lowpass = FilterSpec::IdealLowpass { cut: 1000 };
    let g_low = filter_operator_exact(&eig, &lowpass).unwrap();
    let j = Budget::Rcg(35.0).rotations(n).unwrap();
    let f = Fgft::build(&l, Engine::Parallel, j);
    let err_fgft = filter_op_error(|x| filter_fgft(&f, &lowpass, x), g_low.view()).unwrap();
    let p = poly_degree_for_rcg(n, nnz, 35.0);
    let pl = fit_poly(lowpass.response(&eig.values).unwrap(), p, lmax).unwrap();
    let err_poly = filter_op_error(|x| apply_poly(&sparse, &pl, x), g_low.view()).unwrap();
    let pass_c = err_fgft <= 0.40 && err_fgft < err_poly;

    outcome(
        pass_a && pass_b && pass_c,
        format!(
            "(a) converged max |G_hat - G| {dev_a:.2e}; (b) heat poly p=14 (RCG {:.1}) error {err_b:.4}; \
             (c) low-pass r=1000 FGFT J={j} (RCG {:.1}) error {err_fgft:.4} vs poly p={p} (RCG {:.1}) error {err_poly:.4}",
            poly_rcg(n, nnz, 14),
            rcg_for(n, j),
            poly_rcg(n, nnz, p),
        ),
    )
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let g = graph::sensor(96, graph::sensor_default_threshold(96), 11).unwrap();
    let mut pass = true;
    for (name, format) in [
        ("g.txt", GraphFormat::EdgeList),
        ("g.mtx", GraphFormat::MatrixMarket),
    ] {
        let path = dir.path().join(name);
        save_graph(&g, &path, format).unwrap();
        let back = load_graph(&path, GraphFormat::from_path(&path)).unwrap();
        pass &= laplacian(&back).as_slice() == laplacian(&g).as_slice();
    }
    let f = Fgft::build(&laplacian(&g), Engine::Parallel, 1000);
    let path = dir.path().join("g.fgft");
    save_fgft(&f, &path).unwrap();
    let back = load_fgft(&path).unwrap();
    pass &= encode_fgft(&back) == encode_fgft(&f);
    pass &= decode_fgft(&encode_fgft(&f)).is_ok();
    outcome(
        pass,
        "excluded: wall-clock time-gain rows, real-graph curves and SNR values (need external \
         datasets); graph and FGFT loaders round-trip",
    )
}

fn main() -> ExitCode {
    let mut rt = RoundTrips::default();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} [{}] {name} ({secs:.1}s): {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        results.push((id, name, out, secs));
    };
    run(1, "exact oracle on rings", &mut criterion_1);
    run(2, "off-diagonal drop identity", &mut criterion_2);
    run(3, "engine equivalence", &mut criterion_3);
    run(4, "RCG arithmetic", &mut criterion_4);
    run(5, "sensor error plateau", &mut || criterion_5(&mut rt));
    run(6, "SBM structure trends", &mut || criterion_6(&mut rt));
    run(7, "family spot checks and engine gap", &mut || {
        criterion_7(&mut rt)
    });
    run(8, "round trip and orthogonality", &mut || criterion_8(&rt));
    run(9, "band energy properties", &mut criterion_9);
    run(10, "filtering", &mut criterion_10);
    run(11, "exclusions and loaders", &mut criterion_11);
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
