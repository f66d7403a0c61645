//! Frequency-selective MIMO channels: tapped-delay-line profiles, block
//! fading realizations, cyclic-prefixed transmission and the per-bin
//! matrices `H_k` seen after the receiver DFT.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::SystemConfig;

/// Sample period of a 67 µs block carrying 128 symbols.
pub const REFERENCE_SAMPLE_PERIOD: f64 = 67e-6 / 128.0;

/// Extended Typical Urban taps from 3GPP TS 36.104 (delay ns, relative power dB).
const ETU_TAPS: [(f64, f64); 9] = [
    (0.0, -1.0),
    (50.0, -1.0),
    (120.0, -1.0),
    (200.0, 0.0),
    (230.0, 0.0),
    (500.0, 0.0),
    (1600.0, -3.0),
    (2300.0, -5.0),
    (5000.0, -7.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: f64,
    pub power_db: f64,
}

/// Continuous-time power delay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub name: String,
    pub taps: Vec<Tap>,
}

impl DelayProfile {
    pub fn new(name: impl Into<String>, taps: Vec<Tap>) -> Result<Self> {
        let profile = Self {
            name: name.into(),
            taps,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn etu() -> Self {
        Self {
            name: "etu".into(),
            taps: ETU_TAPS
                .iter()
                .map(|&(ns, db)| Tap {
                    delay: ns * 1e-9,
                    power_db: db,
                })
                .collect(),
        }
    }

    pub fn flat() -> Self {
        Self {
            name: "flat".into(),
            taps: vec![Tap {
                delay: 0.0,
                power_db: 0.0,
            }],
        }
    }

    /// `taps` equal-power taps spaced one sample apart.
    pub fn uniform(taps: usize, sample_period: f64) -> Result<Self> {
        if taps == 0 {
            return Err(Error::Profile("uniform profile needs at least one tap".into()));
        }
        Ok(Self {
            name: format!("uniform-{taps}"),
            taps: (0..taps)
                .map(|i| Tap {
                    delay: i as f64 * sample_period,
                    power_db: 0.0,
                })
                .collect(),
        })
    }

    /// Resolves `etu`, `flat` or `uniform-<L>`.
    pub fn builtin(name: &str, sample_period: f64) -> Result<Self> {
        match name {
            "etu" => Ok(Self::etu()),
            "flat" => Ok(Self::flat()),
            other => match other.strip_prefix("uniform-").map(str::parse::<usize>) {
                Some(Ok(taps)) => Self::uniform(taps, sample_period),
                _ => Err(Error::Profile(format!(
                    "unknown profile {other:?}; expected etu, flat or uniform-<L>"
                ))),
            },
        }
    }

    /// Reads `(delay_seconds, power_db)` rows; an optional header row is skipped.
    pub fn from_csv_reader(name: impl Into<String>, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut taps = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Profile(format!(
                    "row {row}: expected 2 columns, found {}",
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(delay), Ok(power_db)) => taps.push(Tap { delay, power_db }),
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::Profile(format!(
                        "row {row}: cannot parse {:?}",
                        record.iter().collect::<Vec<_>>()
                    )))
                }
            }
        }
        Self::new(name, taps)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::from_csv_reader(name, std::fs::File::open(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::Profile("profile has no taps".into()));
        }
        for (i, tap) in self.taps.iter().enumerate() {
            if !(tap.delay >= 0.0) || !tap.power_db.is_finite() {
                return Err(Error::Profile(format!("tap {i} has invalid delay or power")));
            }
        }
        if self.taps.windows(2).any(|w| w[1].delay <= w[0].delay) {
            return Err(Error::Profile("tap delays must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Sample-spaced profile: linear tap powers summing to one, zero-power gaps allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    pub name: String,
    pub powers: Vec<f64>,
}

impl SampledProfile {
    /// Number of sample-spaced taps `L` (last occupied delay + 1).
    pub fn taps(&self) -> usize {
        self.powers.len()
    }

    /// Sample delays carrying nonzero power.
    pub fn occupied(&self) -> Vec<usize> {
        self.powers
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Rounds each tap delay to the nearest sample, merging taps that collide,
/// and renormalizes to unit total power.
pub fn sample_profile(profile: &DelayProfile, sample_period: f64) -> Result<SampledProfile> {
    if !(sample_period > 0.0) {
        return Err(Error::Profile(format!("sample period {sample_period} must be positive")));
    }
    profile.validate()?;
    let delays: Vec<usize> = profile
        .taps
        .iter()
        .map(|t| (t.delay / sample_period).round() as usize)
        .collect();
    let taps = delays.iter().max().copied().unwrap_or(0) + 1;
    let mut powers = vec![0.0; taps];
    for (tap, &d) in profile.taps.iter().zip(&delays) {
        powers[d] += 10f64.powf(tap.power_db / 10.0);
    }
    let total: f64 = powers.iter().sum();
    powers.iter_mut().for_each(|p| *p /= total);
    Ok(SampledProfile {
        name: profile.name.clone(),
        powers,
    })
}

/// One block-fading channel draw.
///
/// `gains[(i * n_rx + r) * streams + p * n_tx + u]` is the gain of tap `i`
/// from antenna `u` of user `p` to receive antenna `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub n_rx: usize,
    pub streams: usize,
    pub taps: usize,
    pub gains: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn from_gains(n_rx: usize, streams: usize, taps: usize, gains: Vec<Complex64>) -> Result<Self> {
        if gains.len() != n_rx * streams * taps {
            return Err(Error::Dimension(format!(
                "{} gains for {taps} taps of {n_rx}x{streams}",
                gains.len()
            )));
        }
        Ok(Self {
            n_rx,
            streams,
            taps,
            gains,
        })
    }

    /// Row-major `n_rx × streams` matrix of tap `i`.
    pub fn tap(&self, i: usize) -> &[Complex64] {
        let size = self.n_rx * self.streams;
        &self.gains[i * size..(i + 1) * size]
    }

    /// Circular convolution of an `n`-long block, `y_t = Σ_i Ω^i s_{(t-i) mod n}`.
    pub fn circular_convolve(&self, s: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); n * self.n_rx];
        for t in 0..n {
            for i in 0..self.taps {
                let src = (t + n * self.taps - i) % n;
                self.accumulate_tap(i, &s[src * self.streams..(src + 1) * self.streams], &mut y[t * self.n_rx..(t + 1) * self.n_rx]);
            }
        }
        y
    }

    fn accumulate_tap(&self, i: usize, s: &[Complex64], y: &mut [Complex64]) {
        let omega = self.tap(i);
        for (r, out) in y.iter_mut().enumerate() {
            let row = &omega[r * self.streams..(r + 1) * self.streams];
            *out += row.iter().zip(s).map(|(h, x)| h * x).sum::<Complex64>();
        }
    }
}

/// Circularly symmetric complex Gaussian sample with `E|n|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// Draws i.i.d. Rayleigh taps with variances taken from `profile`.
pub fn draw_realization<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    profile: &SampledProfile,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let taps = profile.taps();
    if taps > cfg.n_cp + 1 {
        return Err(Error::ChannelTooLong {
            taps,
            n_cp: cfg.n_cp,
        });
    }
    let per_tap = cfg.n_rx * cfg.streams();
    let mut gains = Vec::with_capacity(taps * per_tap);
    for &power in &profile.powers {
        for _ in 0..per_tap {
            gains.push(complex_gaussian(rng, power));
        }
    }
    Ok(ChannelRealization {
        n_rx: cfg.n_rx,
        streams: cfg.streams(),
        taps,
        gains,
    })
}

/// Prepends the last `n_cp` transmit vectors of an `n_stream`-wide block.
pub fn add_cyclic_prefix(s: &[Complex64], streams: usize, n_cp: usize) -> Vec<Complex64> {
    let n = s.len() / streams;
    assert!(n_cp <= n, "cyclic prefix longer than block");
    let mut out = Vec::with_capacity(s.len() + n_cp * streams);
    out.extend_from_slice(&s[(n - n_cp) * streams..]);
    out.extend_from_slice(s);
    out
}

/// Linear convolution of a cyclic-prefixed block through `real`, CP removal,
/// and complex AWGN with `E|n|² = noise_variance` per receive sample.
pub fn apply_channel<R: Rng + ?Sized>(
    real: &ChannelRealization,
    s_with_cp: &[Complex64],
    n_cp: usize,
    noise_variance: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let k = real.streams;
    if k == 0 || s_with_cp.len() % k != 0 || s_with_cp.len() / k <= n_cp {
        return Err(Error::Dimension(format!(
            "input of {} entries is not a cyclic-prefixed block of width {k} with prefix {n_cp}",
            s_with_cp.len()
        )));
    }
    let total = s_with_cp.len() / k;
    let n = total - n_cp;
    let mut y = vec![Complex64::new(0.0, 0.0); n * real.n_rx];
    for t in 0..n {
        let tau = t + n_cp;
        let out = &mut y[t * real.n_rx..(t + 1) * real.n_rx];
        for i in 0..real.taps.min(tau + 1) {
            let src = tau - i;
            real.accumulate_tap(i, &s_with_cp[src * k..(src + 1) * k], out);
        }
    }
    if noise_variance > 0.0 {
        for v in &mut y {
            *v += complex_gaussian(rng, noise_variance);
        }
    }
    Ok(y)
}

/// Per-bin channel matrices `H_k = Σ_i Ω^i ω^{ki}` with `ω = exp(-2πj/n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDomainChannel {
    pub n: usize,
    pub n_rx: usize,
    pub streams: usize,
    mats: Vec<Complex64>,
}

impl FrequencyDomainChannel {
    /// Row-major `n_rx × streams` matrix of bin `k`.
    pub fn bin(&self, k: usize) -> &[Complex64] {
        let size = self.n_rx * self.streams;
        &self.mats[k * size..(k + 1) * size]
    }

    /// `H S` for a frequency-domain block laid out bin-major.
    pub fn apply(&self, s_freq: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n * self.n_rx];
        for k in 0..self.n {
            let h = self.bin(k);
            let s = &s_freq[k * self.streams..(k + 1) * self.streams];
            for r in 0..self.n_rx {
                out[k * self.n_rx + r] = h[r * self.streams..(r + 1) * self.streams]
                    .iter()
                    .zip(s)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        out
    }

    /// `Σ_k ‖H_k‖_F²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.mats.iter().map(|v| v.norm_sqr()).sum()
    }
}

pub fn to_frequency(real: &ChannelRealization, n: usize) -> FrequencyDomainChannel {
    let size = real.n_rx * real.streams;
    let mut mats = vec![Complex64::new(0.0, 0.0); n * size];
    for k in 0..n {
        let bin = &mut mats[k * size..(k + 1) * size];
        for i in 0..real.taps {
            let w = Complex64::from_polar(1.0, -2.0 * PI * ((k * i) % n) as f64 / n as f64);
            for (acc, h) in bin.iter_mut().zip(real.tap(i)) {
                *acc += h * w;
            }
        }
    }
    FrequencyDomainChannel {
        n,
        n_rx: real.n_rx,
        streams: real.streams,
        mats,
    }
}

/// Noise variance `2σ²` giving the requested SNR per receive antenna.
///
/// The SNR is the mean received signal power per antenna,
/// `n_users · n_active · E|s|² · Σ_i p_i`, over `2σ²`.
pub fn noise_variance(cfg: &SystemConfig, profile: &SampledProfile, snr_db: f64) -> f64 {
    let signal = (cfg.n_users * cfg.n_active) as f64 * profile.total_power();
    signal / 10f64.powf(snr_db / 10.0)
}
