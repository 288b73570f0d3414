//! Pixel-space analysis: calibration, centroid shifts, weak-value
//! extraction and the waveplate-angle sweep.

mod calibration;
mod fit;
mod sweep;

pub use calibration::{
    calibrate, centroid_shifts, centroid_shifts_in, extract_weak_value, forward_shifts,
    CalibrationResult, Roi,
};
pub use fit::{fit_gaussian, GaussianFit, MIN_R_SQUARED};
pub use sweep::{
    oracle_weak_value, run_sweep, DeviationSummary, PointStatus, SweepConfig, SweepResult,
    SweepPlan, SweepRow, SWEEP_CSV_HEADER,
};

use num_complex::Complex64;

use crate::{Error, Result};

/// Complex weak value with per-component standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValueEstimate {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    pub n_trials: usize,
}

impl WeakValueEstimate {
    /// Mean over trials; the standard error is the sample standard
    /// deviation over `√n` (zero for a single trial).
    pub fn from_trials(values: &[Complex64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("no trials".into()));
        }
        let n = values.len() as f64;
        // Offsets from the first trial keep identical trials exact.
        let first = values[0];
        let offset = values.iter().map(|v| v - first).sum::<Complex64>() / n;
        let mean = first + offset;
        let (se_re, se_im) = if values.len() < 2 {
            (0.0, 0.0)
        } else {
            let var = |f: fn(Complex64) -> f64| {
                let m = f(offset);
                values.iter().map(|v| (f(v - first) - m).powi(2)).sum::<f64>() / (n - 1.0)
            };
            ((var(|v| v.re) / n).sqrt(), (var(|v| v.im) / n).sqrt())
        };
        Ok(Self {
            value: mean,
            se_re,
            se_im,
            n_trials: values.len(),
        })
    }

    /// Inverse-variance weighted combination of independent estimates, per
    /// component. Falls back to the plain mean when any error is zero.
    pub fn merge(estimates: &[Self]) -> Option<Self> {
        if estimates.is_empty() {
            return None;
        }
        let n_trials = estimates.iter().map(|e| e.n_trials).sum();
        let combine = |value: fn(&Self) -> f64, se: fn(&Self) -> f64| -> (f64, f64) {
            if estimates.iter().any(|e| !(se(e) > 0.0)) {
                let m = estimates.iter().map(value).sum::<f64>() / estimates.len() as f64;
                return (m, 0.0);
            }
            let (mut sw, mut swx) = (0.0, 0.0);
            for e in estimates {
                let w = se(e).powi(-2);
                sw += w;
                swx += w * value(e);
            }
            (swx / sw, sw.sqrt().recip())
        };
        let (re, se_re) = combine(|e| e.value.re, |e| e.se_re);
        let (im, se_im) = combine(|e| e.value.im, |e| e.se_im);
        Some(Self {
            value: Complex64::new(re, im),
            se_re,
            se_im,
            n_trials,
        })
    }
}
