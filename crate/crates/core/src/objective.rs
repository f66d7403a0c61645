//! The detection metric `‖Y − H (F ⊗ I) s‖²`, evaluated per frequency bin.

use num_complex::Complex64;

use crate::channel::FrequencyDomainChannel;
use crate::dft::BlockDft;

/// Residual energy of a frequency-domain transmit block.
pub fn residual_energy_freq(y: &[Complex64], h: &FrequencyDomainChannel, s_freq: &[Complex64]) -> f64 {
    h.apply(s_freq)
        .iter()
        .zip(y)
        .map(|(hs, y)| (y - hs).norm_sqr())
        .sum()
}

/// Residual energy of a time-domain transmit block.
pub fn residual_energy(
    y: &[Complex64],
    h: &FrequencyDomainChannel,
    dft: &BlockDft,
    s_time: &[Complex64],
) -> f64 {
    residual_energy_freq(y, h, &dft.forward(s_time, h.streams))
}
