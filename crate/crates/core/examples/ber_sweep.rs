// BER against SNR for ADMM and MMSE, written as plot-ready CSV on stdout.
//
//     cargo run --release --example ber_sweep

use gsmfde::sim::{run_sweep, write_points_csv};
use gsmfde::spec::{parse_spec, SweepSpec};

const CONFIG: &str = r#"
seed = 1
detectors = ["admm", "mmse"]
snr_db = [0.0, 4.0, 8.0, 12.0]

[system]
n = 16
n_cp = 10
n_users = 1
n_tx = 4
n_active = 2
n_rx = 4
modulation = 4

[detector]
rho_x = 2.0
rho_z = 2.0

[stop]
min_errors = 100
max_blocks = 40
"#;

fn main() -> gsmfde::Result<()> {
    let spec: SweepSpec = parse_spec(CONFIG, &[])?;
    for result in run_sweep(&spec)? {
        println!("# {}", result.detector);
        write_points_csv(std::io::stdout().lock(), &result.points)?;
    }
    Ok(())
}
