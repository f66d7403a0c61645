//! GSM codebooks: antenna-combination tables, Gray-mapped square QAM,
//! bit mapping and the two projections used by the detectors.
//!
//! Transmit vectors are stored time-major, then user, then antenna: entry
//! `(t, p, u)` of a block lives at `t * n_users * n_tx + p * n_tx + u`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::SystemConfig;

/// Distance below which a value is considered equal to a constellation point.
const POINT_TOLERANCE: f64 = 1e-9;

/// Gray-labelled square QAM with unit average energy.
///
/// The returned vector is indexed by bit label. The first half of a label
/// (most significant bits) selects the in-phase level, the second half the
/// quadrature level; along each axis label 0 maps to the largest positive
/// amplitude and neighbouring levels differ in exactly one bit.
pub fn qam_constellation(order: usize) -> Vec<Complex64> {
    assert!(
        crate::system::is_square_qam(order),
        "QAM order {order} is not a power of 4"
    );
    let axis_bits = order.trailing_zeros() / 2;
    let levels = 1usize << axis_bits;
    let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
    let amplitude = |label: usize| {
        let index = gray_decode(label);
        ((levels - 1) as f64 - 2.0 * index as f64) / scale
    };
    (0..order)
        .map(|label| {
            let i_label = label >> axis_bits;
            let q_label = label & (levels - 1);
            Complex64::new(amplitude(i_label), amplitude(q_label))
        })
        .collect()
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

/// Lexicographic combinations of `k` indices out of `n`, first `limit` only.
fn combinations(n: usize, k: usize, limit: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(limit);
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    while out.len() < limit {
        out.push(current.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < n - k + i {
                current[i] += 1;
                for j in i + 1..k {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
    out
}

/// Valid antenna combinations and symbol alphabet for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct GsmCodebook {
    pub n_tx: usize,
    pub n_active: usize,
    /// Antenna subsets in use, strictly increasing tuples in lexicographic order.
    pub tacs: Vec<Vec<usize>>,
    /// The QAM alphabet, indexed by Gray label.
    pub constellation: Vec<Complex64>,
    /// The alphabet followed by zero.
    pub constellation_with_zero: Vec<Complex64>,
    pub tac_bits: u32,
    pub symbol_bits: u32,
}

impl GsmCodebook {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let tacs = combinations(cfg.n_tx, cfg.n_active, cfg.n_comb());
        let constellation = qam_constellation(cfg.modulation);
        let mut constellation_with_zero = constellation.clone();
        constellation_with_zero.push(Complex64::new(0.0, 0.0));
        Ok(Self {
            n_tx: cfg.n_tx,
            n_active: cfg.n_active,
            tacs,
            constellation,
            constellation_with_zero,
            tac_bits: cfg.tac_bits(),
            symbol_bits: cfg.symbol_bits(),
        })
    }

    pub fn modulation(&self) -> usize {
        self.constellation.len()
    }

    /// Largest real or imaginary magnitude in the alphabet.
    pub fn max_coordinate(&self) -> f64 {
        self.constellation
            .iter()
            .map(|p| p.re.abs().max(p.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Number of distinct per-user GSM symbols, `n_comb * M^n_active`.
    pub fn symbols_per_slice(&self) -> f64 {
        self.tacs.len() as f64 * (self.modulation() as f64).powi(self.n_active as i32)
    }

    /// Writes the per-user GSM symbol with the given TAC and labels into `out`.
    pub fn write_slice(&self, tac: usize, labels: &[usize], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for (&antenna, &label) in self.tacs[tac].iter().zip(labels) {
            out[antenna] = self.constellation[label];
        }
    }

    /// Finds the TAC whose index set equals `support`.
    pub fn tac_index(&self, support: &[usize]) -> Option<usize> {
        self.tacs.iter().position(|t| t == support)
    }

    /// Index of the alphabet point equal to `value`, within a small tolerance.
    pub fn label_of(&self, value: Complex64) -> Option<usize> {
        self.constellation
            .iter()
            .position(|p| (p - value).norm() <= POINT_TOLERANCE)
    }
}

/// Information bits of one block together with their transmit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GsmBlock {
    pub bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

fn read_uint(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn write_uint(value: usize, width: usize, out: &mut Vec<u8>) {
    for shift in (0..width).rev() {
        out.push(((value >> shift) & 1) as u8);
    }
}

/// Maps `n * n_users * bits_per_gsm_symbol` bits onto a transmit block.
///
/// Each user's group starts with the big-endian TAC index, followed by one
/// Gray label per active antenna in increasing antenna order.
pub fn map_bits(bits: &[u8], codebook: &GsmCodebook, cfg: &SystemConfig) -> Result<GsmBlock> {
    let expected = cfg.bits_per_block();
    if bits.len() != expected {
        return Err(Error::BitCount {
            expected,
            actual: bits.len(),
        });
    }
    if let Some(pos) = bits.iter().position(|&b| b > 1) {
        return Err(Error::Dimension(format!("bit {pos} has value {}", bits[pos])));
    }
    let per_slice = cfg.bits_per_gsm_symbol();
    let tac_bits = codebook.tac_bits as usize;
    let symbol_bits = codebook.symbol_bits as usize;
    let mut symbols = vec![Complex64::new(0.0, 0.0); cfg.n * cfg.streams()];
    let mut labels = vec![0usize; cfg.n_active];
    for (slice, (chunk, out)) in bits
        .chunks(per_slice)
        .zip(symbols.chunks_mut(cfg.n_tx))
        .enumerate()
    {
        debug_assert!(slice < cfg.n * cfg.n_users);
        let tac = read_uint(&chunk[..tac_bits]);
        for (a, label) in labels.iter_mut().enumerate() {
            let start = tac_bits + a * symbol_bits;
            *label = read_uint(&chunk[start..start + symbol_bits]);
        }
        codebook.write_slice(tac, &labels, out);
    }
    Ok(GsmBlock {
        bits: bits.to_vec(),
        symbols,
    })
}

/// Inverse of [`map_bits`] for hard decisions that are valid GSM blocks.
pub fn demap_bits(
    symbols: &[Complex64],
    codebook: &GsmCodebook,
    cfg: &SystemConfig,
) -> Result<Vec<u8>> {
    let expected = cfg.n * cfg.streams();
    if symbols.len() != expected {
        return Err(Error::Dimension(format!(
            "block has {} entries, expected {expected}",
            symbols.len()
        )));
    }
    let mut bits = Vec::with_capacity(cfg.bits_per_block());
    let mut support = Vec::with_capacity(cfg.n_tx);
    for (slice, values) in symbols.chunks(cfg.n_tx).enumerate() {
        let (t, user) = (slice / cfg.n_users, slice % cfg.n_users);
        support.clear();
        support.extend(
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm() > POINT_TOLERANCE)
                .map(|(i, _)| i),
        );
        let tac = codebook.tac_index(&support).ok_or_else(|| Error::InvalidSlice {
            t,
            user,
            reason: format!("support {support:?} is not a valid antenna combination"),
        })?;
        write_uint(tac, codebook.tac_bits as usize, &mut bits);
        for &antenna in &support {
            let label = codebook
                .label_of(values[antenna])
                .ok_or_else(|| Error::InvalidSlice {
                    t,
                    user,
                    reason: format!("{} is not a constellation point", values[antenna]),
                })?;
            write_uint(label, codebook.symbol_bits as usize, &mut bits);
        }
    }
    Ok(bits)
}

/// Euclidean projection onto vectors supported on a valid TAC.
pub fn project_support(r: &[Complex64], codebook: &GsmCodebook) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); r.len()];
    project_support_into(r, codebook, &mut out);
    out
}

/// [`project_support`] writing into `out`; returns the chosen TAC index.
///
/// The TAC with the largest energy of `r` wins, ties going to the lowest index.
pub fn project_support_into(r: &[Complex64], codebook: &GsmCodebook, out: &mut [Complex64]) -> usize {
    debug_assert_eq!(r.len(), codebook.n_tx);
    let mut best = 0;
    let mut best_energy = f64::NEG_INFINITY;
    for (index, tac) in codebook.tacs.iter().enumerate() {
        let energy: f64 = tac.iter().map(|&i| r[i].norm_sqr()).sum();
        if energy > best_energy {
            best_energy = energy;
            best = index;
        }
    }
    out.fill(Complex64::new(0.0, 0.0));
    for &i in &codebook.tacs[best] {
        out[i] = r[i];
    }
    best
}

/// Zeros `out` off TAC `tac` and rounds `values` onto the alphabet on it.
pub fn harden_on_tac(values: &[Complex64], tac: usize, codebook: &GsmCodebook, out: &mut [Complex64]) {
    out.fill(Complex64::new(0.0, 0.0));
    for &i in &codebook.tacs[tac] {
        out[i] = codebook.constellation[nearest_index(values[i], &codebook.constellation)];
    }
}

/// Index of the point of `set` closest to `v`, ties going to the lowest index.
pub fn nearest_index(v: Complex64, set: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, p) in set.iter().enumerate() {
        let d = (v - p).norm_sqr();
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    best
}

/// Componentwise rounding onto `set` (either the alphabet or the alphabet with zero).
pub fn project_lattice(v: &[Complex64], set: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|&x| set[nearest_index(x, set)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg(n_tx: usize, n_active: usize, modulation: usize) -> SystemConfig {
        SystemConfig {
            n: 2,
            n_cp: 1,
            n_users: 2,
            n_tx,
            n_active,
            n_rx: 4,
            modulation,
        }
    }

    #[test]
    fn tac_tables() {
        let cb = GsmCodebook::new(&cfg(7, 2, 4)).unwrap();
        assert_eq!(cb.tacs.len(), 16);
        assert_eq!(cb.tac_bits, 4);

        let cb = GsmCodebook::new(&cfg(4, 2, 4)).unwrap();
        assert_eq!(cb.tacs, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2]]);

        let cb = GsmCodebook::new(&cfg(1, 1, 4)).unwrap();
        assert_eq!(cb.tacs, vec![vec![0]]);
        assert_eq!(cb.tac_bits, 0);
    }

    #[test]
    fn tacs_are_distinct_and_increasing() {
        for (n_tx, n_active) in [(5, 2), (6, 3), (8, 4), (7, 1)] {
            let cb = GsmCodebook::new(&cfg(n_tx, n_active, 4)).unwrap();
            for tac in &cb.tacs {
                assert_eq!(tac.len(), n_active);
                assert!(tac.windows(2).all(|w| w[0] < w[1]));
                assert!(tac.iter().all(|&i| i < n_tx));
            }
            let mut sorted = cb.tacs.clone();
            sorted.dedup();
            assert_eq!(sorted.len(), cb.tacs.len());
        }
    }

    #[test]
    fn rejects_bad_codebooks() {
        assert!(GsmCodebook::new(&cfg(2, 3, 4)).is_err());
        assert!(GsmCodebook::new(&cfg(4, 2, 6)).is_err());
        assert!(GsmCodebook::new(&cfg(4, 2, 32)).is_err());
    }

    #[test]
    fn constellations_have_unit_energy_and_gray_neighbours() {
        for order in [4usize, 16, 64, 256] {
            let points = qam_constellation(order);
            let energy: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((energy - 1.0).abs() < 1e-12, "order {order}: {energy}");
            let dmin = (0..order)
                .flat_map(|i| (i + 1..order).map(move |j| (i, j)))
                .map(|(i, j)| (points[i] - points[j]).norm())
                .fold(f64::INFINITY, f64::min);
            for i in 0..order {
                for j in 0..order {
                    if i != j && (points[i] - points[j]).norm() < dmin * 1.0001 {
                        assert_eq!((i ^ j).count_ones(), 1, "order {order}: {i} vs {j}");
                    }
                }
            }
        }
        let qpsk = qam_constellation(4);
        let a = 1.0 / 2f64.sqrt();
        assert_eq!(qpsk, vec![c(a, a), c(a, -a), c(-a, a), c(-a, -a)]);
    }

    #[test]
    fn all_zero_bits_map_to_first_tac_and_point() {
        let cfg = cfg(4, 2, 4);
        let cb = GsmCodebook::new(&cfg).unwrap();
        let block = map_bits(&vec![0; cfg.bits_per_block()], &cb, &cfg).unwrap();
        let a = 1.0 / 2f64.sqrt();
        assert_eq!(&block.symbols[..4], &[c(a, a), c(a, a), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn tac_index_three_selects_antennas_one_and_two() {
        let cfg = SystemConfig { n: 1, n_users: 1, ..cfg(4, 2, 4) };
        let cb = GsmCodebook::new(&cfg).unwrap();
        let bits = [1, 1, 0, 0, 0, 0];
        let block = map_bits(&bits, &cb, &cfg).unwrap();
        let support: Vec<usize> = (0..4).filter(|&i| block.symbols[i].norm() > 0.0).collect();
        assert_eq!(support, vec![1, 2]);
        assert_eq!(&demap_bits(&block.symbols, &cb, &cfg).unwrap()[..2], &[1, 1]);
    }

    #[test]
    fn map_rejects_wrong_bit_count() {
        let cfg = cfg(4, 2, 4);
        let cb = GsmCodebook::new(&cfg).unwrap();
        let err = map_bits(&[0; 5], &cb, &cfg).unwrap_err();
        assert!(matches!(err, Error::BitCount { expected: 24, actual: 5 }));
    }

    #[test]
    fn demap_rejects_invalid_slices() {
        let cfg = SystemConfig { n: 1, n_users: 1, ..cfg(4, 2, 4) };
        let cb = GsmCodebook::new(&cfg).unwrap();
        let a = 1.0 / 2f64.sqrt();
        let one_active = [c(a, a), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            demap_bits(&one_active, &cb, &cfg),
            Err(Error::InvalidSlice { t: 0, user: 0, .. })
        ));
        // {2,3} exists as a subset but is not among the four TACs in use
        let unused_tac = [c(0.0, 0.0), c(0.0, 0.0), c(a, a), c(a, a)];
        assert!(demap_bits(&unused_tac, &cb, &cfg).is_err());
        let off_grid = [c(0.5, 0.5), c(a, a), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(demap_bits(&off_grid, &cb, &cfg).is_err());
    }

    #[test]
    fn support_projection_examples() {
        let cb = GsmCodebook::new(&cfg(4, 2, 4)).unwrap();
        let r = [c(0.1, 0.0), c(2.0, 0.0), c(-1.5, 0.0), c(0.05, 0.0)];
        assert_eq!(
            project_support(&r, &cb),
            vec![c(0.0, 0.0), c(2.0, 0.0), c(-1.5, 0.0), c(0.0, 0.0)]
        );

        let member = [c(0.0, 0.0), c(0.3, -1.0), c(0.7, 0.2), c(0.0, 0.0)];
        assert_eq!(project_support(&member, &cb), member.to_vec());

        let mut out = [c(9.0, 9.0); 4];
        let tac = project_support_into(&[c(0.0, 0.0); 4], &cb, &mut out);
        assert_eq!(tac, 0);
        assert_eq!(out, [c(0.0, 0.0); 4]);
    }

    #[test]
    fn lattice_projection_examples() {
        let cb = GsmCodebook::new(&cfg(4, 2, 4)).unwrap();
        let a = 1.0 / 2f64.sqrt();
        let out = project_lattice(&[c(0.9, 0.8)], &cb.constellation_with_zero);
        assert_eq!(out, vec![c(a, a)]);
        assert!(((c(0.9, 0.8) - c(a, a)).norm() - 0.2140).abs() < 1e-3);

        let members = cb.constellation_with_zero.clone();
        assert_eq!(project_lattice(&members, &cb.constellation_with_zero), members);

        assert_eq!(project_lattice(&[c(0.0, 0.0)], &cb.constellation), vec![c(a, a)]);
        assert_eq!(project_lattice(&[c(0.1, 0.0)], &cb.constellation_with_zero), vec![c(0.0, 0.0)]);
    }
}
