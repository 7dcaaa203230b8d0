use fgft::experiments::{run_eband, BenchOptions, Budget, EbandConfig};
use fgft::graph;
use fgft::Engine;

// Regression floor; the measured value for this seed is 0.909.
#[test]
fn sensor_1024_low_band_energy_floor() {
    let g = graph::sensor(1024, graph::sensor_default_threshold(1024), 0).unwrap();
    let cfg = EbandConfig {
        budgets: vec![Budget::NLogN(1.0)],
        engine: Engine::Parallel,
        fractions: vec![0.05],
    };
    let opts = BenchOptions {
        seeds: vec![0],
        timing: false,
        max_dense_n: 1024,
    };
    let rows = run_eband("sensor", &g, 0, &cfg, &opts).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].alpha, 51);
    assert!(rows[0].energy >= 0.6, "E = {}", rows[0].energy);
    assert!((rows[1].energy - 1.0).abs() < 1e-10);
}
