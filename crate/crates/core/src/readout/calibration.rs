//! Pixel-space calibration and weak-value extraction.

use num_complex::Complex64;

use super::fit::fit_gaussian;
use crate::bench::SensorImage;
use crate::{Error, Result};

/// Pixel-unit constants of the readout.
///
/// `sigma_x`, `sigma_y` are 1/e² half-widths of Gaussian fits to the
/// reference marginals. `origin` is the fractional centroid of the
/// reference, so a reference image has zero shift exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub delta_x: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub origin: (f64, f64),
}

/// Inclusive-exclusive pixel window for centroiding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub x: (usize, usize),
    pub y: (usize, usize),
}

/// `references` are zero-shift (`|A⟩`) images, averaged before fitting;
/// `displaced` is the unit-shift (`|D⟩`) image.
pub fn calibrate(references: &[SensorImage], displaced: &SensorImage) -> Result<CalibrationResult> {
    let reference = SensorImage::average(references)?;
    if reference.geometry().sensor_px != displaced.geometry().sensor_px {
        return Err(Error::InvalidArgument("reference and displaced sensors differ".into()));
    }
    let fx = fit_gaussian(&reference.marginal_x(), 'x')?;
    let fy = fit_gaussian(&reference.marginal_y(), 'y')?;
    let origin = reference.centroid()?;
    let (dx, _) = displaced.centroid()?;
    Ok(CalibrationResult {
        delta_x: dx - origin.0,
        sigma_x: fx.half_width,
        sigma_y: fy.half_width,
        origin,
    })
}

/// `(⟨n_x'⟩, ⟨n_y'⟩)` relative to the calibrated origin, over the full sensor.
pub fn centroid_shifts(image: &SensorImage, cal: &CalibrationResult) -> Result<(f64, f64)> {
    let (cx, cy) = image.centroid()?;
    Ok((cx - cal.origin.0, cy - cal.origin.1))
}

/// As [`centroid_shifts`], restricted to a window.
pub fn centroid_shifts_in(
    image: &SensorImage,
    cal: &CalibrationResult,
    roi: &Roi,
) -> Result<(f64, f64)> {
    if roi.x.0 >= roi.x.1 || roi.y.0 >= roi.y.1 || roi.x.1 > image.width() || roi.y.1 > image.height()
    {
        return Err(Error::InvalidArgument(format!("window {roi:?} is empty or off the sensor")));
    }
    let (mut sum, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for ny in roi.y.0..roi.y.1 {
        for nx in roi.x.0..roi.x.1 {
            let v = image.pixel(nx, ny);
            sum += v;
            sx += v * nx as f64;
            sy += v * ny as f64;
        }
    }
    if !(sum > 0.0) {
        return Err(Error::EmptyImage);
    }
    Ok((sx / sum - cal.origin.0, sy / sum - cal.origin.1))
}

fn check(cal: &CalibrationResult) -> Result<()> {
    for (name, v) in [("delta_x", cal.delta_x), ("sigma_x", cal.sigma_x), ("sigma_y", cal.sigma_y)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidCalibration(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// `(⟨n_x'⟩ + i·(σ_x'/σ_y')·⟨n_y'⟩)/δ_x'`.
pub fn extract_weak_value(shifts: (f64, f64), cal: &CalibrationResult) -> Result<Complex64> {
    check(cal)?;
    Ok(Complex64::new(shifts.0, cal.sigma_x / cal.sigma_y * shifts.1) / cal.delta_x)
}

/// Pixel shifts that [`extract_weak_value`] maps back to `w`.
pub fn forward_shifts(w: Complex64, cal: &CalibrationResult) -> Result<(f64, f64)> {
    check(cal)?;
    Ok((cal.delta_x * w.re, cal.delta_x * w.im * cal.sigma_y / cal.sigma_x))
}
