//! Reference detectors: a per-bin linear MMSE equalizer followed by GSM
//! hard decisions, and exhaustive maximum-likelihood search for tiny blocks.

use num_complex::Complex64;
use nalgebra::DVector;

use crate::admm::{gram_plus_diag, hermitian_apply};
use crate::channel::FrequencyDomainChannel;
use crate::dft::BlockDft;
use crate::error::{Error, Result};
use crate::gsm::{harden_on_tac, project_support_into, GsmCodebook};
use crate::objective::residual_energy;
use crate::system::SystemConfig;

/// Regularization floor used when the noise variance is zero.
pub const MMSE_FLOOR: f64 = 1e-12;

/// Default cap on the number of blocks the exhaustive search may visit.
pub const DEFAULT_ORACLE_GUARD: u64 = 1_000_000;

/// `Ŝ_k = (H_k^H H_k + 2σ² I)^{-1} H_k^H Y_k`, back to time domain, then per
/// user the strongest TAC is kept and its entries are rounded onto the alphabet.
pub fn mmse_detect(
    y: &[Complex64],
    h: &FrequencyDomainChannel,
    codebook: &GsmCodebook,
    cfg: &SystemConfig,
    noise_variance: f64,
) -> Result<Vec<Complex64>> {
    let (n, n_rx, k) = (h.n, h.n_rx, h.streams);
    if y.len() != n * n_rx {
        return Err(Error::Dimension(format!("received block has {} entries, expected {}", y.len(), n * n_rx)));
    }
    let reg = vec![noise_variance.max(MMSE_FLOOR); k];
    let mut s_freq = Vec::with_capacity(n * k);
    for bin in 0..n {
        let hk = h.bin(bin);
        let a = gram_plus_diag(hk, n_rx, k, &reg);
        let rhs = DVector::from_vec(hermitian_apply(hk, n_rx, k, &y[bin * n_rx..(bin + 1) * n_rx]));
        let solution = match a.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => a.lu().solve(&rhs).ok_or(Error::Singular { bin })?,
        };
        s_freq.extend_from_slice(solution.as_slice());
    }
    let s_time = BlockDft::new(n).inverse(&s_freq, k);
    let mut out = vec![Complex64::new(0.0, 0.0); s_time.len()];
    let mut projected = vec![Complex64::new(0.0, 0.0); cfg.n_tx];
    for (values, decided) in s_time.chunks(cfg.n_tx).zip(out.chunks_mut(cfg.n_tx)) {
        let tac = project_support_into(values, codebook, &mut projected);
        harden_on_tac(values, tac, codebook, decided);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlSolution {
    pub symbols: Vec<Complex64>,
    pub objective: f64,
}

/// Number of valid blocks, `(n_comb · M^n_active)^(n · n_users)`.
pub fn candidate_count(codebook: &GsmCodebook, cfg: &SystemConfig) -> f64 {
    codebook.symbols_per_slice().powi((cfg.n * cfg.n_users) as i32)
}

/// Every per-user GSM symbol: TAC index major, then labels with the lowest
/// active antenna most significant.
fn slice_alphabet(codebook: &GsmCodebook) -> Vec<Vec<Complex64>> {
    let m = codebook.modulation();
    let per_tac = m.pow(codebook.n_active as u32);
    let mut out = Vec::with_capacity(codebook.tacs.len() * per_tac);
    let mut labels = vec![0usize; codebook.n_active];
    for tac in 0..codebook.tacs.len() {
        for index in 0..per_tac {
            let mut rest = index;
            for label in labels.iter_mut().rev() {
                *label = rest % m;
                rest /= m;
            }
            let mut slice = vec![Complex64::new(0.0, 0.0); codebook.n_tx];
            codebook.write_slice(tac, &labels, &mut slice);
            out.push(slice);
        }
    }
    out
}

/// Exhaustive minimization of `‖Y − H (F ⊗ I) s‖²` over all valid blocks.
///
/// Slices are enumerated like the digits of a number whose most significant
/// digit is the first (time, user) slice; ties keep the first block visited.
pub fn mld_oracle(
    y: &[Complex64],
    h: &FrequencyDomainChannel,
    codebook: &GsmCodebook,
    cfg: &SystemConfig,
    guard: u64,
) -> Result<MlSolution> {
    let candidates = candidate_count(codebook, cfg);
    if candidates > guard as f64 {
        return Err(Error::GuardExceeded { candidates, guard });
    }
    let alphabet = slice_alphabet(codebook);
    let slices = cfg.n * cfg.n_users;
    let dft = BlockDft::new(cfg.n);
    let mut digits = vec![0usize; slices];
    let mut block: Vec<Complex64> = digits.iter().flat_map(|&d| alphabet[d].iter().copied()).collect();
    let mut best = MlSolution {
        symbols: block.clone(),
        objective: f64::INFINITY,
    };
    loop {
        let f = residual_energy(y, h, &dft, &block);
        if f < best.objective {
            best.objective = f;
            best.symbols.copy_from_slice(&block);
        }
        // odometer increment from the least significant slice
        let mut pos = slices;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] == alphabet.len() {
                digits[pos] = 0;
            }
            block[pos * cfg.n_tx..(pos + 1) * cfg.n_tx].copy_from_slice(&alphabet[digits[pos]]);
            if digits[pos] != 0 {
                break;
            }
        }
    }
}
