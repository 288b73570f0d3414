//! Desk-scale simulation of a weak measurement whose complex weak value is
//! read out in a single apparatus: the real part from the pointer position
//! along `x`, the imaginary part from the pointer momentum along `y`.
//!
//! The crate is layered bottom-up:
//!
//! - [`jones`]: exact polarization (two-level) quantum mechanics, waveplates,
//!   analytic weak values and direct state reconstruction.
//! - [`pointer`]: von Neumann coupling of a Gaussian pointer, post-selection,
//!   closed-form moments and the Method A/B/C readout contracts.
//! - [`bench`]: wave-optics model of the optical bench on a discrete grid,
//!   down to sensor pixels and photon shot noise.
//! - [`readout`]: calibration, centroid analysis, pixel-space weak-value
//!   extraction and the waveplate-angle sweep.

pub mod bench;
mod error;
pub mod jones;
pub mod pointer;
pub mod readout;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Shortest round-trip text for `v`, in exponent form when it is very
/// small or very large. Used by every CSV writer.
pub fn csv_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Degrees to radians.
#[inline]
pub fn deg(angle: f64) -> f64 {
    angle.to_radians()
}
