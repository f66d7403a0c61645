// Detects one noisy block with the frequency-domain ADMM detector and the
// MMSE baseline, and prints the ADMM convergence trace as CSV.
//
//     cargo run --release --example admm_detect

use gsmfde::admm::{write_diagnostics_csv, AdmmDetector, DetectorConfig, Penalty};
use gsmfde::baseline::mmse_detect;
use gsmfde::gsm::demap_bits;
use gsmfde::sim::LinkSetup;
use gsmfde::spec::ChannelSpec;
use gsmfde::SystemConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gsmfde::Result<()> {
    let cfg = SystemConfig {
        n: 32,
        n_cp: 10,
        n_users: 2,
        n_tx: 4,
        n_active: 2,
        n_rx: 8,
        modulation: 4,
    };
    let detector = DetectorConfig {
        rho_x: Penalty::Uniform(4.0),
        rho_z: Penalty::Uniform(4.0),
        record_diagnostics: true,
        seed: 3,
        ..DetectorConfig::default()
    };
    let link = LinkSetup::new(cfg.clone(), ChannelSpec::default().sampled()?, detector.clone(), 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let block = link.draw_instance(link.noise_variance(8.0), &mut rng)?;

    let det = AdmmDetector::new(&block.h, &link.codebook, &cfg, detector)?;
    let out = det.detect(&block.y);
    let count = |symbols: &[_]| -> gsmfde::Result<usize> {
        let bits = demap_bits(symbols, &link.codebook, &cfg)?;
        Ok(bits.iter().zip(&block.bits).filter(|(a, b)| a != b).count())
    };
    let mmse = mmse_detect(&block.y, &block.h, &link.codebook, &cfg, block.noise_variance)?;
    println!("# bits {}  ADMM errors {}  MMSE errors {}  f_best {:.4}", block.bits.len(), count(&out.symbols)?, count(&mmse)?, out.objective);
    write_diagnostics_csv(std::io::stdout().lock(), &out.diagnostics)?;
    Ok(())
}
