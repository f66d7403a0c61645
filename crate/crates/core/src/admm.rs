//! Frequency-domain ADMM detector for GSM single-carrier blocks.
//!
//! The detector splits the maximum-likelihood problem into three pieces
//! that alternate every iteration:
//!
//! 1. a regularized least-squares update of the frequency-domain block `S`,
//!    solved independently per frequency bin with a cached Cholesky factor;
//! 2. a projection of `F^H (S + U)` onto blocks whose per-user support is a
//!    valid antenna combination, giving `x`;
//! 3. a componentwise rounding of `F^H (S + W)` onto the alphabet with zero,
//!    giving `z`;
//!
//! followed by scaled dual updates `U += S − X`, `W += S − Z`. After the
//! projections, the time-domain image of `S` is hardened on the support of
//! `x` and kept if it beats the incumbent objective. Several random
//! initializations share one incumbent.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::FrequencyDomainChannel;
use crate::dft::BlockDft;
use crate::error::{ConfigError, Error, Result};
use crate::gsm::{harden_on_tac, nearest_index, project_support_into, GsmCodebook};
use crate::objective::residual_energy;
use crate::system::SystemConfig;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Diagonal penalty weights, either one value for every coordinate or an
/// explicit list (one per stream, repeated over bins, or one per bin and stream).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Penalty {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl Penalty {
    /// Expands to `n * streams` weights laid out bin-major.
    pub fn expand(&self, n: usize, streams: usize) -> Result<Vec<f64>> {
        match self {
            Penalty::Uniform(v) => Ok(vec![*v; n * streams]),
            Penalty::PerCoordinate(v) if v.len() == streams => {
                Ok((0..n).flat_map(|_| v.iter().copied()).collect())
            }
            Penalty::PerCoordinate(v) if v.len() == n * streams => Ok(v.clone()),
            Penalty::PerCoordinate(v) => Err(Error::Dimension(format!(
                "penalty list of length {} matches neither {streams} streams nor {} coordinates",
                v.len(),
                n * streams
            ))),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Penalty::Uniform(v) => vec![*v],
            Penalty::PerCoordinate(v) => v.clone(),
        }
    }
}

fn default_iterations() -> usize {
    30
}

fn default_restarts() -> usize {
    5
}

fn default_rho() -> Penalty {
    Penalty::Uniform(60.0)
}

/// Detector tuning. Defaults: 30 iterations, 5 restarts, penalties of 60.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(rename = "q", default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_rho")]
    pub rho_x: Penalty,
    #[serde(default = "default_rho")]
    pub rho_z: Penalty,
    #[serde(default)]
    pub seed: u64,
    /// Keep one [`IterationRecord`] per iteration.
    #[serde(default)]
    pub record_diagnostics: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            max_iterations: default_iterations(),
            restarts: default_restarts(),
            rho_x: default_rho(),
            rho_z: default_rho(),
            seed: 0,
            record_diagnostics: false,
        }
    }
}

impl DetectorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut err = ConfigError::new();
        if self.max_iterations == 0 {
            err.push("q", "at least one iteration is required (q >= 1)");
        }
        if self.restarts == 0 {
            err.push("restarts", "at least one initialization is required (restarts >= 1)");
        }
        for (key, rho) in [("rho_x", &self.rho_x), ("rho_z", &self.rho_z)] {
            let values = rho.values();
            if values.is_empty() {
                err.push(key, "penalty list is empty");
            }
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                err.push(key, "penalties must be finite and nonnegative");
            }
        }
        let (x, z) = (self.rho_x.values(), self.rho_z.values());
        let both_zero = match (x.len(), z.len()) {
            (1, _) => z.iter().any(|&b| x[0] == 0.0 && b == 0.0),
            (_, 1) => x.iter().any(|&a| a == 0.0 && z[0] == 0.0),
            (a, b) if a == b => x.iter().zip(&z).any(|(&a, &b)| a == 0.0 && b == 0.0),
            _ => false,
        };
        if both_zero {
            err.push("rho_x", "rho_x and rho_z are both zero for some coordinate");
        }
        err.into_result()
    }
}

/// Cached Cholesky factors of `H_k^H H_k + P_{x,k} + P_{z,k}` for every bin.
pub struct FrequencySolvers {
    pub n: usize,
    pub streams: usize,
    /// Expanded `P_x` diagonal, bin-major.
    pub rho_x: Vec<f64>,
    /// Expanded `P_z` diagonal, bin-major.
    pub rho_z: Vec<f64>,
    factors: Vec<Cholesky<Complex64, Dyn>>,
}

impl FrequencySolvers {
    /// Solves bin `k`'s system for one right-hand side.
    pub fn solve(&self, k: usize, rhs: &[Complex64]) -> Vec<Complex64> {
        let b = DVector::from_column_slice(rhs);
        self.factors[k].solve(&b).as_slice().to_vec()
    }
}

/// `H_k^H H_k + diag(extra)` as a dense matrix.
pub(crate) fn gram_plus_diag(h: &[Complex64], n_rx: usize, streams: usize, extra: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(streams, streams, |a, b| {
        let mut acc: Complex64 = (0..n_rx)
            .map(|r| h[r * streams + a].conj() * h[r * streams + b])
            .sum();
        if a == b {
            acc += extra[a];
        }
        acc
    })
}

/// `H_k^H v` for a length-`n_rx` vector.
pub(crate) fn hermitian_apply(h: &[Complex64], n_rx: usize, streams: usize, v: &[Complex64]) -> Vec<Complex64> {
    (0..streams)
        .map(|a| (0..n_rx).map(|r| h[r * streams + a].conj() * v[r]).sum())
        .collect()
}

/// Factors every per-bin system once; the factors are reused for all
/// iterations and restarts of a block.
pub fn precompute_solvers(
    h: &FrequencyDomainChannel,
    rho_x: &[f64],
    rho_z: &[f64],
) -> Result<FrequencySolvers> {
    let (n, k) = (h.n, h.streams);
    if rho_x.len() != n * k || rho_z.len() != n * k {
        return Err(Error::Dimension(format!(
            "penalties must have {} entries, got {} and {}",
            n * k,
            rho_x.len(),
            rho_z.len()
        )));
    }
    let mut factors = Vec::with_capacity(n);
    for bin in 0..n {
        let diag: Vec<f64> = (0..k).map(|j| rho_x[bin * k + j] + rho_z[bin * k + j]).collect();
        let a = gram_plus_diag(h.bin(bin), h.n_rx, k, &diag);
        factors.push(a.cholesky().ok_or(Error::Singular { bin })?);
    }
    Ok(FrequencySolvers {
        n,
        streams: k,
        rho_x: rho_x.to_vec(),
        rho_z: rho_z.to_vec(),
        factors,
    })
}

/// Iterates of one ADMM run plus the shared incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    /// Frequency-domain block estimate.
    pub s_freq: Vec<Complex64>,
    /// Support-projected time-domain iterate.
    pub x: Vec<Complex64>,
    /// Alphabet-projected time-domain iterate.
    pub z: Vec<Complex64>,
    pub x_freq: Vec<Complex64>,
    pub z_freq: Vec<Complex64>,
    /// Scaled dual variable of the `S = X` constraint.
    pub u: Vec<Complex64>,
    /// Scaled dual variable of the `S = Z` constraint.
    pub w: Vec<Complex64>,
    /// Chosen TAC index of every (time, user) slice of `x`.
    pub support: Vec<usize>,
    pub f_best: f64,
    /// Best hardened block so far; empty until the first step.
    pub s_hat: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub candidate_objective: f64,
    pub improved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub restart: usize,
    pub iteration: usize,
    pub candidate_objective: f64,
    pub best_objective: f64,
}

/// Writes diagnostics as CSV rows `restart,iteration,candidate_objective,best_objective`.
pub fn write_diagnostics_csv<W: std::io::Write>(out: W, records: &[IterationRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for record in records {
        wtr.serialize(record)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Hard time-domain block, always a valid GSM block.
    pub symbols: Vec<Complex64>,
    pub objective: f64,
    pub diagnostics: Vec<IterationRecord>,
}

/// Detector bound to one channel; reusable for any number of received blocks.
pub struct AdmmDetector<'a> {
    cfg: &'a SystemConfig,
    codebook: &'a GsmCodebook,
    h: &'a FrequencyDomainChannel,
    config: DetectorConfig,
    solvers: FrequencySolvers,
    dft: BlockDft,
}

impl<'a> AdmmDetector<'a> {
    pub fn new(
        h: &'a FrequencyDomainChannel,
        codebook: &'a GsmCodebook,
        cfg: &'a SystemConfig,
        config: DetectorConfig,
    ) -> Result<Self> {
        config.validate()?;
        if h.n != cfg.n || h.streams != cfg.streams() || h.n_rx != cfg.n_rx {
            return Err(Error::Dimension(format!(
                "channel is {}x{}x{}, configuration expects {}x{}x{}",
                h.n,
                h.n_rx,
                h.streams,
                cfg.n,
                cfg.n_rx,
                cfg.streams()
            )));
        }
        let rho_x = config.rho_x.expand(cfg.n, cfg.streams())?;
        let rho_z = config.rho_z.expand(cfg.n, cfg.streams())?;
        let solvers = precompute_solvers(h, &rho_x, &rho_z)?;
        Ok(Self {
            cfg,
            codebook,
            h,
            config,
            solvers,
            dft: BlockDft::new(cfg.n),
        })
    }

    pub fn solvers(&self) -> &FrequencySolvers {
        &self.solvers
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Per-bin matched filter output `H_k^H Y_k`, computed once per block.
    pub fn matched_filter(&self, y: &[Complex64]) -> Vec<Complex64> {
        let (n_rx, k) = (self.h.n_rx, self.h.streams);
        (0..self.h.n)
            .flat_map(|bin| hermitian_apply(self.h.bin(bin), n_rx, k, &y[bin * n_rx..(bin + 1) * n_rx]))
            .collect()
    }

    /// Starting state from an unconstrained time-domain guess `s0`:
    /// `x0 = Π_S(s0)`, `z0 = Π_{A0}(s0)`, zero duals, and the given incumbent.
    pub fn initial_state(&self, s0: &[Complex64], f_best: f64, s_hat: Vec<Complex64>) -> DetectorState {
        let len = s0.len();
        let mut x = vec![ZERO; len];
        let support = s0
            .chunks(self.cfg.n_tx)
            .zip(x.chunks_mut(self.cfg.n_tx))
            .map(|(r, out)| project_support_into(r, self.codebook, out))
            .collect();
        let zset = &self.codebook.constellation_with_zero;
        let z: Vec<Complex64> = s0.iter().map(|&v| zset[nearest_index(v, zset)]).collect();
        let k = self.cfg.streams();
        DetectorState {
            s_freq: vec![ZERO; len],
            x_freq: self.dft.forward(&x, k),
            z_freq: self.dft.forward(&z, k),
            x,
            z,
            u: vec![ZERO; len],
            w: vec![ZERO; len],
            support,
            f_best,
            s_hat,
        }
    }

    /// Uniform draw inside the constellation's bounding square.
    pub fn random_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let c = self.codebook.max_coordinate();
        (0..self.cfg.n * self.cfg.streams())
            .map(|_| Complex64::new(rng.random_range(-c..=c), rng.random_range(-c..=c)))
            .collect()
    }

    /// One full iteration: S update, both projections, candidate hardening,
    /// forward transforms and dual updates.
    pub fn step(&self, state: &mut DetectorState, y: &[Complex64], matched: &[Complex64]) -> StepReport {
        let k = self.cfg.streams();
        let n_tx = self.cfg.n_tx;
        let solvers = &self.solvers;

        // S update, independently per bin
        let mut rhs = vec![ZERO; k];
        for bin in 0..self.cfg.n {
            let range = bin * k..(bin + 1) * k;
            for (j, idx) in range.clone().enumerate() {
                rhs[j] = matched[idx]
                    + solvers.rho_x[idx] * (state.x_freq[idx] - state.u[idx])
                    + solvers.rho_z[idx] * (state.z_freq[idx] - state.w[idx]);
            }
            let solution = solvers.solve(bin, &rhs);
            state.s_freq[range].copy_from_slice(&solution);
        }

        // support projection of F^H (S + U)
        let su: Vec<Complex64> = state.s_freq.iter().zip(&state.u).map(|(s, u)| s + u).collect();
        let r = self.dft.inverse(&su, k);
        for ((slice, out), tac) in r
            .chunks(n_tx)
            .zip(state.x.chunks_mut(n_tx))
            .zip(state.support.iter_mut())
        {
            *tac = project_support_into(slice, self.codebook, out);
        }

        // alphabet-with-zero projection of F^H (S + W)
        let sw: Vec<Complex64> = state.s_freq.iter().zip(&state.w).map(|(s, w)| s + w).collect();
        let zset = &self.codebook.constellation_with_zero;
        for (z, v) in state.z.iter_mut().zip(self.dft.inverse(&sw, k)) {
            *z = zset[nearest_index(v, zset)];
        }

        // harden the time-domain S on supp(x)
        let s_time = self.dft.inverse(&state.s_freq, k);
        let mut candidate = vec![ZERO; s_time.len()];
        for ((values, out), &tac) in s_time
            .chunks(n_tx)
            .zip(candidate.chunks_mut(n_tx))
            .zip(&state.support)
        {
            harden_on_tac(values, tac, self.codebook, out);
        }
        let candidate_objective = residual_energy(y, self.h, &self.dft, &candidate);
        let improved = candidate_objective < state.f_best;
        if improved {
            state.f_best = candidate_objective;
            state.s_hat = candidate;
        }

        state.x_freq = self.dft.forward(&state.x, k);
        state.z_freq = self.dft.forward(&state.z, k);
        for i in 0..state.s_freq.len() {
            state.u[i] += state.s_freq[i] - state.x_freq[i];
            state.w[i] += state.s_freq[i] - state.z_freq[i];
        }

        StepReport {
            candidate_objective,
            improved,
        }
    }

    /// Runs every restart for the configured number of iterations and
    /// returns the best hardened block.
    pub fn detect(&self, y: &[Complex64]) -> Detection {
        let matched = self.matched_filter(y);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut f_best = f64::INFINITY;
        let mut s_hat = Vec::new();
        let mut diagnostics = Vec::new();
        for restart in 0..self.config.restarts {
            let s0 = self.random_start(&mut rng);
            let mut state = self.initial_state(&s0, f_best, s_hat);
            for iteration in 0..self.config.max_iterations {
                let report = self.step(&mut state, y, &matched);
                if self.config.record_diagnostics {
                    diagnostics.push(IterationRecord {
                        restart,
                        iteration,
                        candidate_objective: report.candidate_objective,
                        best_objective: state.f_best,
                    });
                }
            }
            f_best = state.f_best;
            s_hat = state.s_hat;
        }
        Detection {
            symbols: s_hat,
            objective: f_best,
            diagnostics,
        }
    }
}

/// One-shot detection of the frequency-domain block `y`.
pub fn detect(
    y: &[Complex64],
    h: &FrequencyDomainChannel,
    codebook: &GsmCodebook,
    cfg: &SystemConfig,
    config: &DetectorConfig,
) -> Result<Detection> {
    Ok(AdmmDetector::new(h, codebook, cfg, config.clone())?.detect(y))
}
