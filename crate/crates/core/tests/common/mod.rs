//! Independent reference computations shared by the integration tests.
//! Nothing here calls the library's DFT, projections or per-bin solver.
#![allow(dead_code)]

use std::f64::consts::PI;

use gsmfde::channel::ChannelRealization;
use gsmfde::gsm::GsmCodebook;
use gsmfde::SystemConfig;
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn system(n: usize, n_cp: usize, n_users: usize, n_tx: usize, n_active: usize, n_rx: usize, modulation: usize) -> SystemConfig {
    SystemConfig {
        n,
        n_cp,
        n_users,
        n_tx,
        n_active,
        n_rx,
        modulation,
    }
}

pub fn gaussian<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    // Box-Muller, kept separate from the library's sampler
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random::<f64>();
    let r = (-var * u1.ln()).sqrt();
    c(r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

pub fn random_realization<R: Rng>(rng: &mut R, n_rx: usize, streams: usize, taps: usize) -> ChannelRealization {
    let gains = (0..n_rx * streams * taps).map(|_| gaussian(rng, 1.0 / taps as f64)).collect();
    ChannelRealization::from_gains(n_rx, streams, taps, gains).unwrap()
}

pub fn random_vector<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<Complex64> {
    (0..len)
        .map(|_| c(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
        .collect()
}

pub fn random_bits<R: Rng>(rng: &mut R, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

/// Explicit `N n_rx × N K` block-circulant matrix Ω.
pub fn block_circulant(real: &ChannelRealization, n: usize) -> Vec<Vec<Complex64>> {
    let (n_rx, k) = (real.n_rx, real.streams);
    let mut omega = vec![vec![ZERO; n * k]; n * n_rx];
    for t in 0..n {
        for i in 0..real.taps {
            let src = (t + n - i % n) % n;
            for r in 0..n_rx {
                for j in 0..k {
                    omega[t * n_rx + r][src * k + j] += real.gains[(i * n_rx + r) * k + j];
                }
            }
        }
    }
    omega
}

pub fn mat_vec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Unitary DFT of every stream of a time-major block by direct summation.
pub fn naive_dft(data: &[Complex64], width: usize, inverse: bool) -> Vec<Complex64> {
    let n = data.len() / width;
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = vec![ZERO; data.len()];
    for k in 0..n {
        for t in 0..n {
            let w = Complex64::from_polar(scale, sign * 2.0 * PI * ((k * t) % n) as f64 / n as f64);
            for j in 0..width {
                out[k * width + j] += w * data[t * width + j];
            }
        }
    }
    out
}

pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

pub fn diff_norm_sq(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Projection onto TAC-supported vectors by exhaustive distance comparison.
pub fn brute_support(r: &[Complex64], cb: &GsmCodebook) -> Vec<Complex64> {
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for tac in &cb.tacs {
        let cand: Vec<Complex64> = (0..r.len()).map(|i| if tac.contains(&i) { r[i] } else { ZERO }).collect();
        let d = diff_norm_sq(r, &cand);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, cand));
        }
    }
    best.unwrap().1
}

/// Nearest point of `set` for every entry: sort candidates by (distance, index).
pub fn brute_lattice(v: &[Complex64], set: &[Complex64]) -> Vec<Complex64> {
    v.iter()
        .map(|&x| {
            let mut order: Vec<(f64, usize)> = set.iter().enumerate().map(|(i, &p)| ((x - p).norm_sqr(), i)).collect();
            order.sort_by(|a, b| a.partial_cmp(b).unwrap());
            set[order[0].1]
        })
        .collect()
}

/// `‖y − Ω s‖²` evaluated in time domain with the explicit matrix.
pub fn time_domain_objective(y_time: &[Complex64], omega: &[Vec<Complex64>], s: &[Complex64]) -> f64 {
    diff_norm_sq(y_time, &mat_vec(omega, s))
}

/// Solves a dense Hermitian positive definite system by Gaussian elimination
/// with partial pivoting.
pub fn dense_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut m: Vec<Vec<Complex64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].norm().partial_cmp(&m[j][col].norm()).unwrap()).unwrap();
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    let mut x = vec![ZERO; n];
    for row in (0..n).rev() {
        let s: Complex64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    x
}
