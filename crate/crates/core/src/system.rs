//! Link dimensions shared by every stage of the simulator.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Largest TAC index width accepted; the TAC table is materialized.
pub const MAX_TAC_BITS: u32 = 20;

/// Dimensions of a cyclic-prefixed single-carrier GSM link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Block length in channel uses.
    pub n: usize,
    /// Cyclic prefix length in samples.
    pub n_cp: usize,
    pub n_users: usize,
    /// Transmit antennas per user.
    pub n_tx: usize,
    /// Active antennas per user.
    pub n_active: usize,
    pub n_rx: usize,
    /// Square QAM order.
    pub modulation: usize,
}

/// Binomial coefficient, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn floor_log2(v: u128) -> u32 {
    127 - v.leading_zeros()
}

/// True for 4, 16, 64, ...
pub fn is_square_qam(m: usize) -> bool {
    m >= 4 && m.is_power_of_two() && m.trailing_zeros() % 2 == 0
}

impl SystemConfig {
    /// Total transmit streams seen by the receiver, `n_users * n_tx`.
    pub fn streams(&self) -> usize {
        self.n_users * self.n_tx
    }

    /// Number of antenna subsets of size `n_active`.
    pub fn subsets(&self) -> u128 {
        binomial(self.n_tx, self.n_active).unwrap_or(u128::MAX)
    }

    /// Bits carried by the antenna-combination index.
    pub fn tac_bits(&self) -> u32 {
        floor_log2(self.subsets().max(1))
    }

    /// Number of TACs in use, a power of two.
    pub fn n_comb(&self) -> usize {
        1usize << self.tac_bits()
    }

    pub fn symbol_bits(&self) -> u32 {
        self.modulation.trailing_zeros()
    }

    pub fn bits_per_gsm_symbol(&self) -> usize {
        self.tac_bits() as usize + self.n_active * self.symbol_bits() as usize
    }

    pub fn bits_per_block(&self) -> usize {
        self.n * self.n_users * self.bits_per_gsm_symbol()
    }

    /// Users-per-receive-antenna load.
    pub fn user_load(&self) -> f64 {
        self.n_users as f64 / self.n_rx as f64
    }

    /// Transmit-streams-per-receive-antenna load; above one the system is underdetermined.
    pub fn stream_load(&self) -> f64 {
        self.streams() as f64 / self.n_rx as f64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut err = ConfigError::new();
        if self.n == 0 {
            err.push("n", "block length must be at least 1");
        }
        if self.n_cp > self.n {
            err.push("n_cp", format!("cyclic prefix {} longer than block {}", self.n_cp, self.n));
        }
        if self.n_users == 0 {
            err.push("n_users", "at least one user is required");
        }
        if self.n_rx == 0 {
            err.push("n_rx", "at least one receive antenna is required");
        }
        if self.n_active == 0 {
            err.push("n_active", "at least one active antenna is required (1 <= n_active)");
        }
        if self.n_active > self.n_tx {
            err.push(
                "n_active",
                format!(
                    "n_active ({}) must not exceed n_tx ({}) (1 <= n_active <= n_tx)",
                    self.n_active, self.n_tx
                ),
            );
        }
        if !self.modulation.is_power_of_two() {
            err.push(
                "modulation",
                format!("QAM order {} is not a power of two", self.modulation),
            );
        } else if !is_square_qam(self.modulation) {
            err.push(
                "modulation",
                format!("QAM order {} is not a square constellation (power of 4)", self.modulation),
            );
        }
        if self.n_active >= 1 && self.n_active <= self.n_tx && self.tac_bits() > MAX_TAC_BITS {
            err.push(
                "n_tx",
                format!("{} TAC bits exceed the supported maximum of {MAX_TAC_BITS}", self.tac_bits()),
            );
        }
        err.into_result()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_tx: usize, n_active: usize, modulation: usize) -> SystemConfig {
        SystemConfig {
            n: 8,
            n_cp: 2,
            n_users: 1,
            n_tx,
            n_active,
            n_rx: 4,
            modulation,
        }
    }

    #[test]
    fn derived_counts() {
        let c = cfg(7, 2, 4);
        assert_eq!(c.subsets(), 21);
        assert_eq!(c.n_comb(), 16);
        assert_eq!(c.tac_bits(), 4);
        assert_eq!(c.bits_per_gsm_symbol(), 4 + 2 * 2);

        let c = cfg(1, 1, 64);
        assert_eq!(c.n_comb(), 1);
        assert_eq!(c.tac_bits(), 0);
        assert_eq!(c.bits_per_gsm_symbol(), 6);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let err = cfg(2, 3, 4).validate().unwrap_err();
        assert!(err.keys().any(|k| k == "n_active"));
        let err = cfg(4, 2, 8).validate().unwrap_err();
        assert!(err.keys().any(|k| k == "modulation"));
        let err = cfg(4, 2, 12).validate().unwrap_err();
        assert!(err.to_string().contains("power of two"));
        assert!(cfg(4, 2, 16).validate().is_ok());
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(2, 3), Some(0));
        assert_eq!(binomial(64, 32), Some(1_832_624_140_942_590_534));
    }
}
