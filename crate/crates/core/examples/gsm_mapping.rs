// Bits to GSM symbols and back, plus the two projections the detector uses.
//
//     cargo run --example gsm_mapping

use gsmfde::gsm::{demap_bits, map_bits, project_lattice, project_support, GsmCodebook};
use gsmfde::SystemConfig;
use num_complex::Complex64;

fn show(values: &[Complex64]) -> String {
    let shown: Vec<String> = values.iter().map(|v| format!("{:+.3}{:+.3}j", v.re, v.im)).collect();
    format!("[{}]", shown.join(", "))
}

fn main() -> gsmfde::Result<()> {
    let cfg = SystemConfig {
        n: 2,
        n_cp: 0,
        n_users: 1,
        n_tx: 4,
        n_active: 2,
        n_rx: 1,
        modulation: 4,
    };
    cfg.validate()?;
    let cb = GsmCodebook::new(&cfg)?;
    println!(
        "{} of {} antenna subsets usable -> {} TAC bits + {} symbol bits = {} bits per GSM symbol",
        cfg.n_comb(),
        cfg.subsets(),
        cfg.tac_bits(),
        cfg.n_active as u32 * cfg.symbol_bits(),
        cfg.bits_per_gsm_symbol()
    );
    for (i, tac) in cb.tacs.iter().enumerate() {
        println!("  TAC {i}: antennas {tac:?}");
    }

    let bits = [1, 1, 0, 1, 1, 0, 0, 0, 1, 0, 1, 1];
    let block = map_bits(&bits, &cb, &cfg)?;
    for (t, slice) in block.symbols.chunks(cfg.n_tx).enumerate() {
        println!("t={t}: {}", show(slice));
    }
    assert_eq!(demap_bits(&block.symbols, &cb, &cfg)?, bits);

    let noisy = [
        Complex64::new(0.1, -0.05),
        Complex64::new(0.9, 0.6),
        Complex64::new(-0.2, 0.1),
        Complex64::new(-0.5, -0.8),
    ];
    // antennas 1 and 3 carry the most energy but {1, 3} is not a usable TAC
    println!("received:           {}", show(&noisy));
    println!("support projection: {}", show(&project_support(&noisy, &cb)));
    println!("lattice projection: {}", show(&project_lattice(&noisy, &cb.constellation_with_zero)));
    Ok(())
}
