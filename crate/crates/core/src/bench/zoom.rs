//! Chirp-z (Bluestein) evaluation of a DFT on an arbitrary uniform set of
//! output frequencies.
//!
//! Computes `F[m] = Σ_j f[j]·exp(−i(ω₀ + m·Δω)·j)` for `m < n_out` in
//! `O((n_in + n_out) log)` using the identity
//! `jm = (j² + m² − (m − j)²)/2`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct ZoomDft {
    n_in: usize,
    n_out: usize,
    len: usize,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Smallest 5-smooth integer ≥ `n`; the FFT is fastest on those lengths.
fn smooth_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn chirp(rate: f64, t: usize) -> Complex64 {
    let t = t as f64;
    Complex64::from_polar(1.0, 0.5 * rate * t * t)
}

impl ZoomDft {
    pub fn new(n_in: usize, n_out: usize, omega0: f64, step: f64) -> Self {
        let len = smooth_len(n_in + n_out - 1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);

        let pre = (0..n_in)
            .map(|j| Complex64::from_polar(1.0, -omega0 * j as f64) * chirp(-step, j))
            .collect();
        let post = (0..n_out)
            .map(|m| chirp(-step, m) / len as f64)
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        for (t, k) in kernel.iter_mut().enumerate().take(n_out) {
            *k = chirp(step, t);
        }
        for t in 1..n_in {
            kernel[len - t] = chirp(step, t);
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len()];
        forward.process_with_scratch(&mut kernel, &mut scratch);

        Self {
            n_in,
            n_out,
            len,
            pre,
            post,
            kernel,
            forward,
            inverse,
        }
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Work buffers sized for [`ZoomDft::apply`].
    pub fn buffers(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let scratch = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        (
            vec![Complex64::new(0.0, 0.0); self.len],
            vec![Complex64::new(0.0, 0.0); scratch],
        )
    }

    pub fn apply(
        &self,
        input: &[Complex64],
        output: &mut [Complex64],
        work: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        debug_assert_eq!(input.len(), self.n_in);
        debug_assert_eq!(output.len(), self.n_out);
        for (w, (x, p)) in work.iter_mut().zip(input.iter().zip(&self.pre)) {
            *w = x * p;
        }
        work[self.n_in..].fill(Complex64::new(0.0, 0.0));
        self.forward.process_with_scratch(work, scratch);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            *w *= k;
        }
        self.inverse.process_with_scratch(work, scratch);
        for (o, (w, p)) in output.iter_mut().zip(work.iter().zip(&self.post)) {
            *o = w * p;
        }
    }
}
