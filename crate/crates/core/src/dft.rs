//! Unitary DFT applied along the time axis of interleaved antenna streams,
//! i.e. multiplication by `F ⊗ I_width` and its adjoint.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse unitary transforms of length `n` with `ω = exp(-2πj/n)`.
#[derive(Clone)]
pub struct BlockDft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for BlockDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockDft").field("n", &self.n).finish()
    }
}

impl BlockDft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `(F ⊗ I_width) data`, where `data[t * width + j]` is stream `j` at time `t`.
    pub fn forward(&self, data: &[Complex64], width: usize) -> Vec<Complex64> {
        self.apply(&*self.forward, data, width)
    }

    /// `(F^H ⊗ I_width) data`.
    pub fn inverse(&self, data: &[Complex64], width: usize) -> Vec<Complex64> {
        self.apply(&*self.inverse, data, width)
    }

    fn apply(&self, fft: &dyn Fft<f64>, data: &[Complex64], width: usize) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(data.len(), n * width, "block length mismatch");
        // transpose into one contiguous row per stream
        let mut rows = vec![Complex64::new(0.0, 0.0); n * width];
        for t in 0..n {
            for j in 0..width {
                rows[j * n + t] = data[t * width + j];
            }
        }
        fft.process(&mut rows);
        let mut out = vec![Complex64::new(0.0, 0.0); n * width];
        for j in 0..width {
            for t in 0..n {
                out[t * width + j] = rows[j * n + t] * self.scale;
            }
        }
        out
    }
}
