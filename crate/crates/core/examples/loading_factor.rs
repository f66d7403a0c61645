// Required SNR at a target BER as the number of users grows, for GSM
// (4 antennas, 1 active, QPSK) and single-antenna 16-QAM, both at 4 bits
// per channel use per user.
//
//     cargo run --release --example loading_factor

use gsmfde::sim::{run_family, write_family_csv};
use gsmfde::spec::{parse_spec, FamilySpec};

const CONFIG: &str = r#"
seed = 3
target_ber = 5e-2
snr_db = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0]

[detector]
rho_x = 1.0
rho_z = 1.0

[stop]
min_errors = 200
max_blocks = 20

[[member]]
label = "gsm-1"
system = { n = 16, n_cp = 10, n_users = 1, n_tx = 4, n_active = 1, n_rx = 2, modulation = 4 }

[[member]]
label = "gsm-2"
system = { n = 16, n_cp = 10, n_users = 2, n_tx = 4, n_active = 1, n_rx = 2, modulation = 4 }

[[member]]
label = "conv-1"
system = { n = 16, n_cp = 10, n_users = 1, n_tx = 1, n_active = 1, n_rx = 2, modulation = 16 }

[[member]]
label = "conv-2"
system = { n = 16, n_cp = 10, n_users = 2, n_tx = 1, n_active = 1, n_rx = 2, modulation = 16 }
"#;

fn main() -> gsmfde::Result<()> {
    // every offending key is reported at once
    let bad = ["target_ber=2.0".to_string(), "stop.min_errors=0".to_string()];
    if let Err(e) = parse_spec::<FamilySpec>(CONFIG, &bad) {
        println!("rejected:\n{e}\n");
    }
    let spec: FamilySpec = parse_spec(CONFIG, &[])?;
    let rows = run_family(&spec)?;
    write_family_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
