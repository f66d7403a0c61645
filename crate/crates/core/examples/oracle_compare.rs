// ADMM against exhaustive maximum-likelihood search on tiny blocks.
//
//     cargo run --release --example oracle_compare

use gsmfde::admm::{DetectorConfig, Penalty};
use gsmfde::sim::run_oracle_compare;
use gsmfde::spec::{ChannelSpec, OracleSpec};
use gsmfde::SystemConfig;

fn main() -> gsmfde::Result<()> {
    for (n_rx, rho) in [(84, 60.0), (2, 60.0), (2, 1.0)] {
        let spec = OracleSpec {
            seed: 7,
            instances: 100,
            snr_db: 10.0,
            system: SystemConfig {
                n: 2,
                n_cp: 1,
                n_users: 1,
                n_tx: 2,
                n_active: 1,
                n_rx,
                modulation: 4,
            },
            channel: ChannelSpec {
                profile: "uniform-2".into(),
                ..ChannelSpec::default()
            },
            detector: DetectorConfig {
                rho_x: Penalty::Uniform(rho),
                rho_z: Penalty::Uniform(rho),
                ..DetectorConfig::default()
            },
            oracle_guard: gsmfde::baseline::DEFAULT_ORACLE_GUARD,
        };
        let report = run_oracle_compare(&spec)?;
        println!(
            "n_rx={n_rx:>2} rho={rho:>4}: match {:.2}, mean f_admm/f_ml {:.3}, f_admm < f_ml {}",
            report.match_rate, report.mean_objective_ratio, report.admm_below_ml
        );
    }
    Ok(())
}
