use fgft::filtering::{apply_poly, fit_poly, PolyFilter};
use fgft::graph::{self, load_graph, save_graph, GraphFormat};
use fgft::jacobi::{exact_eigh, truncated_jacobi, truncated_jacobi_efficient};
use fgft::metrics::{band_energy_profile, err_d, spectral_overlap};
use fgft::transform::{decode_fgft, encode_fgft};
use fgft::{laplacian, Engine, Fgft, Graph, SparseLaplacian, SymmetricMatrix};
use proptest::prelude::*;

fn symmetric(n: usize) -> impl Strategy<Value = SymmetricMatrix> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                data[i * n + j] = v[i * n + j];
                data[j * n + i] = v[i * n + j];
            }
        }
        SymmetricMatrix::from_row_major(n, data).unwrap()
    })
}

fn random_graph() -> impl Strategy<Value = Graph> {
    (4usize..24, 0.15f64..0.6, any::<u64>())
        .prop_map(|(n, p, seed)| graph::erdos_renyi(n, p, seed).unwrap())
}

fn engine() -> impl Strategy<Value = Engine> {
    prop_oneof![
        Just(Engine::Sequential),
        Just(Engine::SequentialEfficient),
        Just(Engine::Parallel)
    ]
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_undoes_forward(
        g in random_graph(),
        e in engine(),
        j in 0usize..200,
        xs in prop::collection::vec(-10.0f64..10.0, 24),
    ) {
        let f = Fgft::build(&laplacian(&g), e, j);
        let x = &xs[..g.n()];
        let y = f.forward(x).unwrap();
        prop_assert!((norm(&y) - norm(x)).abs() <= 1e-12 * norm(x).max(1.0));
        let back = f.inverse(&y).unwrap();
        let diff: Vec<f64> = back.iter().zip(x).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 1e-12 * norm(x).max(1.0));
    }

    #[test]
    fn each_step_drops_twice_the_pivot_square(m in symmetric(7), j in 1usize..30) {
        let out = truncated_jacobi(&m, j);
        let mut cur = m.clone();
        for g in out.chain.rotations() {
            let before = cur.offdiag_sq();
            let pivot = cur.get(g.p, g.q);
            fgft::givens::conjugate_symmetric(&mut cur, g).unwrap();
            let drop = before - cur.offdiag_sq();
            prop_assert!((drop - 2.0 * pivot * pivot).abs() <= 1e-10 * before.max(1e-300));
        }
    }

    #[test]
    fn efficient_engine_matches_naive(m in symmetric(9), j in 0usize..60) {
        let a = truncated_jacobi(&m, j);
        let b = truncated_jacobi_efficient(&m, j);
        let ra: Vec<_> = a.chain.rotations().cloned().collect();
        let rb: Vec<_> = b.chain.rotations().cloned().collect();
        prop_assert_eq!(ra, rb);
        prop_assert_eq!(a.perm, b.perm);
    }

    #[test]
    fn err_d_decreases_with_budget(g in random_graph(), j in 0usize..100) {
        let l = laplacian(&g);
        let a = err_d(&Fgft::build(&l, Engine::Sequential, j), &l).unwrap();
        let b = err_d(&Fgft::build(&l, Engine::Sequential, j + 1), &l).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn files_round_trip_bitwise(g in random_graph(), e in engine(), j in 0usize..150) {
        let f = Fgft::build(&laplacian(&g), e, j);
        let bytes = encode_fgft(&f);
        let back = decode_fgft(&bytes).unwrap();
        prop_assert_eq!(encode_fgft(&back), bytes);
        prop_assert_eq!(back.lambda_hat(), f.lambda_hat());
    }

    #[test]
    fn band_energy_is_monotone(g in random_graph(), j in 0usize..120) {
        let l = laplacian(&g);
        let n = l.n();
        let exact = exact_eigh(&l).unwrap();
        let f = Fgft::build(&l, Engine::Parallel, j);
        let overlap = spectral_overlap(&f, exact.vectors.view()).unwrap();
        let alphas: Vec<usize> = (0..n).collect();
        let e = band_energy_profile(overlap.view(), &alphas).unwrap();
        prop_assert!(e.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!((e[n - 1] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn poly_filter_is_linear(
        g in random_graph(),
        degree in 0usize..8,
        a in -3.0f64..3.0,
        xs in prop::collection::vec(-1.0f64..1.0, 48),
    ) {
        let n = g.n();
        let l = SparseLaplacian::from_graph(&g);
        let pf: PolyFilter = fit_poly(|t| (-0.5 * t).exp(), degree, 2.0 * g.max_degree().max(1.0)).unwrap();
        let (x, y) = (&xs[..n], &xs[24..24 + n]);
        let combo: Vec<f64> = x.iter().zip(y).map(|(u, v)| a * u + v).collect();
        let lhs = apply_poly(&l, &pf, &combo).unwrap();
        let px = apply_poly(&l, &pf, x).unwrap();
        let py = apply_poly(&l, &pf, y).unwrap();
        for i in 0..n {
            prop_assert!((lhs[i] - (a * px[i] + py[i])).abs() <= 1e-9);
        }
    }

    #[test]
    fn graph_files_round_trip(g in random_graph(), mtx in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let (path, format) = if mtx {
            (dir.path().join("g.mtx"), GraphFormat::MatrixMarket)
        } else {
            (dir.path().join("g.txt"), GraphFormat::EdgeList)
        };
        save_graph(&g, &path, format).unwrap();
        let back = load_graph(&path, GraphFormat::from_path(&path)).unwrap();
        prop_assert_eq!(back.n(), g.n());
        let (lb, lg) = (laplacian(&back), laplacian(&g));
        prop_assert_eq!(lb.as_slice(), lg.as_slice());
    }
}
