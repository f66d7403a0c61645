//! Structural invariants under randomized configurations.

mod common;

use common::*;
use gsmfde::admm::{detect, DetectorConfig};
use gsmfde::channel::to_frequency;
use gsmfde::dft::BlockDft;
use gsmfde::gsm::{demap_bits, map_bits, project_lattice, project_support, GsmCodebook};
use gsmfde::objective::{residual_energy, residual_energy_freq};
use gsmfde::SystemConfig;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_system() -> impl Strategy<Value = SystemConfig> {
    (1usize..6, 1usize..3, 1usize..5, 1usize..4, prop::sample::select(vec![4usize, 16, 64]))
        .prop_flat_map(|(n, n_users, n_tx, n_rx, m)| {
            (Just((n, n_users, n_tx, n_rx, m)), 1..=n_tx)
        })
        .prop_map(|((n, n_users, n_tx, n_rx, m), n_active)| system(n, 1, n_users, n_tx, n_active, n_rx, m))
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| c(a, b)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bit_mapping_round_trips(cfg in small_system(), seed in any::<u64>()) {
        let cb = GsmCodebook::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = random_bits(&mut rng, cfg.bits_per_block());
        let block = map_bits(&bits, &cb, &cfg).unwrap();
        prop_assert_eq!(demap_bits(&block.symbols, &cb, &cfg).unwrap(), bits);
        // exactly n_active nonzero entries per slice
        for slice in block.symbols.chunks(cfg.n_tx) {
            prop_assert_eq!(slice.iter().filter(|v| v.norm() > 0.0).count(), cfg.n_active);
        }
    }

    #[test]
    fn support_projection_is_nearest(n_tx in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_active = 1 + (seed as usize) % n_tx;
        let cb = GsmCodebook::new(&system(1, 0, 1, n_tx, n_active, 1, 4)).unwrap();
        let r = random_vector(&mut rng, n_tx, 2.0);
        let got = project_support(&r, &cb);
        let reference = brute_support(&r, &cb);
        prop_assert!((diff_norm_sq(&r, &got) - diff_norm_sq(&r, &reference)).abs() < 1e-12);
    }

    #[test]
    fn lattice_projection_is_nearest(v in complex_vec(8), m in prop::sample::select(vec![4usize, 16, 64, 256])) {
        let cb = GsmCodebook::new(&system(1, 0, 1, 1, 1, 1, m)).unwrap();
        let got = project_lattice(&v, &cb.constellation);
        let reference = brute_lattice(&v, &cb.constellation);
        for ((x, g), r) in v.iter().zip(&got).zip(&reference) {
            prop_assert!(((x - g).norm_sqr() - (x - r).norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn dft_is_unitary_and_invertible(n in 1usize..20, width in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dft = BlockDft::new(n);
        let x = random_vector(&mut rng, n * width, 1.0);
        let f = dft.forward(&x, width);
        prop_assert!((norm_sq(&f) - norm_sq(&x)).abs() < 1e-9 * norm_sq(&x).max(1.0));
        prop_assert!(diff_norm_sq(&dft.inverse(&f, width), &x) < 1e-20);
    }

    #[test]
    fn objective_is_domain_independent(cfg in small_system(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = cfg.streams();
        let real = random_realization(&mut rng, cfg.n_rx, k, 2.min(cfg.n));
        let h = to_frequency(&real, cfg.n);
        let dft = BlockDft::new(cfg.n);
        let y = random_vector(&mut rng, cfg.n * cfg.n_rx, 1.0);
        let s = random_vector(&mut rng, cfg.n * k, 1.0);
        let a = residual_energy(&y, &h, &dft, &s);
        let b = residual_energy_freq(&y, &h, &dft.forward(&s, k));
        prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
    }

    #[test]
    fn detector_returns_valid_block(cfg in small_system(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cb = GsmCodebook::new(&cfg).unwrap();
        let k = cfg.streams();
        let real = random_realization(&mut rng, cfg.n_rx, k, 2.min(cfg.n));
        let h = to_frequency(&real, cfg.n);
        let y = random_vector(&mut rng, cfg.n * cfg.n_rx, 2.0);
        let config = DetectorConfig { max_iterations: 10, restarts: 2, ..DetectorConfig::default() }.with_seed(seed);
        let det = detect(&y, &h, &cb, &cfg, &config).unwrap();
        prop_assert!(demap_bits(&det.symbols, &cb, &cfg).is_ok());
        let f = residual_energy(&y, &h, &BlockDft::new(cfg.n), &det.symbols);
        prop_assert!((f - det.objective).abs() < 1e-9 * f.max(1.0));
    }
}
