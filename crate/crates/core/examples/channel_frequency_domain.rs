// ETU profile sampling, a cyclic-prefixed transmission, and the per-bin
// frequency-domain model that replaces the block-circulant time-domain one.
//
//     cargo run --example channel_frequency_domain

use gsmfde::channel::{
    add_cyclic_prefix, apply_channel, draw_realization, sample_profile, to_frequency, DelayProfile,
    REFERENCE_SAMPLE_PERIOD,
};
use gsmfde::dft::BlockDft;
use gsmfde::SystemConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gsmfde::Result<()> {
    let profile = sample_profile(&DelayProfile::etu(), REFERENCE_SAMPLE_PERIOD)?;
    println!("ETU at {:.3} us per sample: {} taps, occupied {:?}", REFERENCE_SAMPLE_PERIOD * 1e6, profile.taps(), profile.occupied());

    let cfg = SystemConfig {
        n: 16,
        n_cp: profile.taps() - 1,
        n_users: 2,
        n_tx: 2,
        n_active: 1,
        n_rx: 3,
        modulation: 4,
    };
    let k = cfg.streams();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let real = draw_realization(&cfg, &profile, &mut rng)?;
    let s: Vec<_> = (0..cfg.n * k)
        .map(|i| num_complex::Complex64::new((i % 3) as f64 - 1.0, (i % 2) as f64))
        .collect();

    let y_time = apply_channel(&real, &add_cyclic_prefix(&s, k, cfg.n_cp), cfg.n_cp, 0.0, &mut rng)?;
    let dft = BlockDft::new(cfg.n);
    let h = to_frequency(&real, cfg.n);
    let y_model = h.apply(&dft.forward(&s, k));
    let y_received = dft.forward(&y_time, cfg.n_rx);
    let err: f64 = y_model.iter().zip(&y_received).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    println!("‖F y − H F s‖ = {err:.2e} with n_cp = {}", cfg.n_cp);

    let short = SystemConfig { n_cp: 2, ..cfg.clone() };
    match draw_realization(&short, &profile, &mut rng) {
        Err(e) => println!("n_cp = 2: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
