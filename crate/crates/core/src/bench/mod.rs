//! Wave-optics model of the optical bench.
//!
//! The post-selected pointer is sampled on a grid in the crystal plane. The
//! 4f relay images `x` onto the sensor with `x' = M·x`; the cylindrical lens
//! maps transverse momentum onto position, `y' = b·k_y` with
//! `b = λ·f_FT/(2π)`. Both maps are evaluated with chirp-z transforms
//! directly at the sensor sample points, then integrated per pixel with an
//! `s × s` midpoint rule.

mod field;
mod noise;
mod sensor;
mod zoom;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

pub use field::{PointerField, SpinorField};
pub use noise::{sample_photons, PhotonSampler};
pub(crate) use sensor::csv_error;
pub use sensor::SensorImage;
pub use zoom::ZoomDft;

use crate::jones::PolarizationState;
use crate::pointer::{
    couple_and_postselect, exact_moments, CouplingSpec, GaussianPointerSpec, PostSelectedPointer,
};
use crate::{Error, Result};

/// Optical layout and sensor. Lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchGeometry {
    pub wavelength: f64,
    pub f1: f64,
    pub f2: f64,
    pub f_ft: f64,
    pub pitch: f64,
    /// `(width, height)` in pixels; `x'` runs along the width.
    pub sensor_px: (usize, usize),
}

impl Default for BenchGeometry {
    fn default() -> Self {
        Self {
            wavelength: 633e-9,
            f1: 1.0,
            f2: 1.2,
            f_ft: 1.0,
            pitch: 2.2e-6,
            sensor_px: (2560, 1920),
        }
    }
}

impl BenchGeometry {
    /// `M = f₂/f₁`.
    pub fn magnification(&self) -> f64 {
        self.f2 / self.f1
    }

    /// `b = λ·f_FT/(2π)`: sensor length per unit transverse wavenumber.
    pub fn momentum_scale(&self) -> f64 {
        self.wavelength * self.f_ft / (2.0 * PI)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("f1", self.f1),
            ("f2", self.f2),
            ("f_ft", self.f_ft),
            ("pitch", self.pitch),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sensor_px.0 == 0 || self.sensor_px.1 == 0 {
            return Err(Error::InvalidArgument("sensor must have pixels".into()));
        }
        Ok(())
    }

    /// Pixel index (possibly fractional) under sensor position `x'`; the
    /// optical axis hits the middle of the sensor.
    pub fn pixel_x(&self, x_prime: f64) -> f64 {
        x_prime / self.pitch + 0.5 * (self.sensor_px.0 as f64 - 1.0)
    }

    pub fn pixel_y(&self, y_prime: f64) -> f64 {
        y_prime / self.pitch + 0.5 * (self.sensor_px.1 as f64 - 1.0)
    }
}

/// Crystal-plane sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub extent_x: f64,
    pub extent_y: f64,
}

impl GridSpec {
    pub const DEFAULT_SAMPLES: usize = 1024;
    /// Default extent in units of the pointer width `w`.
    pub const DEFAULT_EXTENT_WIDTHS: f64 = 16.0;

    pub fn for_pointer(pointer: &GaussianPointerSpec, nx: usize, ny: usize) -> Self {
        let extent = Self::DEFAULT_EXTENT_WIDTHS * pointer.width();
        Self {
            nx,
            ny,
            extent_x: extent,
            extent_y: extent,
        }
    }

    pub fn spacing_x(&self) -> f64 {
        self.extent_x / self.nx as f64
    }

    pub fn spacing_y(&self) -> f64 {
        self.extent_y / self.ny as f64
    }

    /// Sampling guard: extent ≥ 8w, spacing ≤ w/16, and every branch at
    /// least 4w inside the grid edge.
    pub fn check(&self, pointer: &PostSelectedPointer) -> Result<()> {
        let w = pointer.spec().width();
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::GridTooCoarse("grid needs at least 2 samples per axis".into()));
        }
        for (axis, extent, spacing) in [
            ('x', self.extent_x, self.spacing_x()),
            ('y', self.extent_y, self.spacing_y()),
        ] {
            if !(extent >= 8.0 * w) {
                return Err(Error::GridTooCoarse(format!(
                    "extent along {axis} is {:.2}w, need ≥ 8w",
                    extent / w
                )));
            }
            if !(spacing <= w / 16.0) {
                return Err(Error::GridTooCoarse(format!(
                    "spacing along {axis} is w/{:.1}, need ≤ w/16",
                    w / spacing
                )));
            }
        }
        for b in pointer.branches() {
            let (cx, cy) = pointer.branch_center(b);
            if cx.abs() + 4.0 * w > 0.5 * self.extent_x || cy.abs() + 4.0 * w > 0.5 * self.extent_y {
                return Err(Error::GridTooCoarse(format!(
                    "branch at ({cx:e}, {cy:e}) m is within 4w of the grid edge"
                )));
            }
        }
        Ok(())
    }
}

/// Everything needed to render a sensor image besides the input state.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub geometry: BenchGeometry,
    /// `None` selects the default grid for the pointer.
    pub grid: Option<GridSpec>,
    /// Midpoint-rule points per pixel along each axis.
    pub subsamples: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            geometry: BenchGeometry::default(),
            grid: None,
            subsamples: 2,
        }
    }
}

impl BenchConfig {
    pub fn grid_for(&self, pointer: &GaussianPointerSpec) -> GridSpec {
        self.grid.unwrap_or_else(|| {
            GridSpec::for_pointer(pointer, GridSpec::DEFAULT_SAMPLES, GridSpec::DEFAULT_SAMPLES)
        })
    }
}

/// Largest intensity fraction that may fall off the sensor.
pub const MAX_CLIPPED_FRACTION: f64 = 1e-6;

/// Post-selected pointer produced by the walk-off crystal and the `|H⟩` polarizer.
pub fn bench_pointer(
    psi: &PolarizationState,
    delta: f64,
    pointer: &GaussianPointerSpec,
) -> Result<PostSelectedPointer> {
    couple_and_postselect(
        psi,
        &CouplingSpec::walk_off(delta)?,
        pointer,
        &PolarizationState::horizontal(),
    )
}

/// Noiseless sensor image for input state `psi` and walk-off `delta`.
///
/// The image has `exposure = 1`, so its total is the post-selection
/// probability.
pub fn simulate_bench(
    psi: &PolarizationState,
    delta: f64,
    pointer: &GaussianPointerSpec,
    config: &BenchConfig,
) -> Result<SensorImage> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be ≥ 0, got {delta}")));
    }
    let post = bench_pointer(psi, delta, pointer)?;
    image_pointer(&post, config)
}

/// Renders any post-selected pointer through the bench.
pub fn image_pointer(post: &PostSelectedPointer, config: &BenchConfig) -> Result<SensorImage> {
    config.geometry.validate()?;
    if config.subsamples == 0 {
        return Err(Error::InvalidArgument("subsamples must be ≥ 1".into()));
    }
    let grid = config.grid_for(post.spec());
    grid.check(post)?;
    let field = PointerField::sample(post, &grid);
    image_field(&field, config)
}

/// Renders a sampled crystal-plane field through the bench.
pub fn image_field(field: &PointerField, config: &BenchConfig) -> Result<SensorImage> {
    let geom = &config.geometry;
    let data = render(field, geom, config.subsamples);
    let image = SensorImage::new(geom.clone(), data, 1.0, config.subsamples)?;
    let norm = field.norm();
    let clipped = (norm - image.total()) / norm;
    if clipped > MAX_CLIPPED_FRACTION {
        return Err(Error::SensorOverflow { fraction: clipped });
    }
    Ok(image)
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    const BLOCK: usize = 32;
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    dst
}

/// Sensor sampling for one grid: the x spectrum transformed along y to the
/// sensor rows, plus the x interpolation that finishes the map.
struct Projector {
    nx: usize,
    width: usize,
    subsamples: usize,
    zoom_x: ZoomDft,
    scale: f64,
}

impl Projector {
    fn new(field: &PointerField, geom: &BenchGeometry, subsamples: usize) -> Self {
        let (nx, dx, dy) = (field.nx(), field.dx(), field.dy());
        let width = geom.sensor_px.0;
        let m = geom.magnification();
        let b = geom.momentum_scale();
        let sub = geom.pitch / subsamples as f64;
        // Band-limited interpolation along x at x = x'/M; phases that depend
        // only on the output point are dropped since only |E|² is needed.
        let kappa = 2.0 * PI / (nx as f64 * dx);
        let x_first = -((nx / 2) as f64) * dx;
        let x0 = 0.5 * sub - 0.5 * width as f64 * geom.pitch;
        let u0 = x0 / m - x_first;
        Self {
            nx,
            width,
            subsamples,
            zoom_x: ZoomDft::new(nx, width * subsamples, -kappa * u0, -kappa * sub / m),
            scale: (dy / nx as f64).powi(2) * sub * sub / (m * 2.0 * PI * b),
        }
    }

    /// `[sensor sample row][x frequency]`; the output phase is common to
    /// each sensor sample so it is dropped as well.
    fn rows(&self, field: &PointerField, geom: &BenchGeometry) -> Vec<Complex64> {
        let (nx, ny, dy) = (field.nx(), field.ny(), field.dy());
        let b = geom.momentum_scale();
        let sub = geom.pitch / self.subsamples as f64;
        let ry = geom.sensor_px.1 * self.subsamples;

        // Spectrum along x, reordered so index j is frequency j − nx/2.
        let mut spectrum = field.data().to_vec();
        let fft = FftPlanner::new().plan_fft_forward(nx);
        for row in spectrum.chunks_exact_mut(nx) {
            fft.process(row);
            row.rotate_right(nx / 2);
        }
        let by_kx = transpose(&spectrum, ny, nx);
        drop(spectrum);

        // Fourier transform along y, evaluated at k_y = y'/b.
        let y0 = 0.5 * sub - 0.5 * geom.sensor_px.1 as f64 * geom.pitch;
        let zoom_y = ZoomDft::new(ny, ry, (y0 / b) * dy, (sub / b) * dy);
        let mut along_y = vec![Complex64::new(0.0, 0.0); nx * ry];
        along_y
            .par_chunks_mut(ry)
            .zip(by_kx.par_chunks(ny))
            .for_each_init(
                || zoom_y.buffers(),
                |(work, scratch), (out, column)| zoom_y.apply(column, out, work, scratch),
            );
        drop(by_kx);
        transpose(&along_y, nx, ry)
    }

    /// Calls `sink(pixel_row, sample_rows)` for every sensor row, where
    /// `sample_rows` holds the `s` interpolated sample lines of each input.
    fn for_each_pixel_row<T, F>(&self, inputs: &[&[Complex64]], out: &mut [T], sink: F)
    where
        T: Send,
        F: Fn(&mut [T], &[Vec<Complex64>]) + Sync,
    {
        let s = self.subsamples;
        let stride = self.nx * s;
        let rx = self.width * s;
        out.par_chunks_mut(self.width).enumerate().for_each_init(
            || (self.zoom_x.buffers(), vec![vec![Complex64::new(0.0, 0.0); rx]; inputs.len() * s]),
            |((work, scratch), lines), (row, pixel_row)| {
                for (i, input) in inputs.iter().enumerate() {
                    let block = &input[row * stride..(row + 1) * stride];
                    for (j, samples) in block.chunks_exact(self.nx).enumerate() {
                        self.zoom_x.apply(samples, &mut lines[i * s + j], work, scratch);
                    }
                }
                sink(pixel_row, lines);
            },
        );
    }
}

/// Expected photons per pixel for one input photon.
fn render(field: &PointerField, geom: &BenchGeometry, subsamples: usize) -> Vec<f64> {
    let projector = Projector::new(field, geom, subsamples);
    let rows = projector.rows(field, geom);
    let (s, scale) = (subsamples, projector.scale);
    let mut pixels = vec![0.0; geom.sensor_px.0 * geom.sensor_px.1];
    projector.for_each_pixel_row(&[&rows], &mut pixels, |pixel_row, lines| {
        for line in lines {
            for (p, chunk) in pixel_row.iter_mut().zip(line.chunks_exact(s)) {
                *p += chunk.iter().map(|v| v.norm_sqr()).sum::<f64>() * scale;
            }
        }
    });
    pixels
}

/// Pixel-integrated `|E₁|²`, `|E₂|²` and `E₁*·E₂` for two fields on the same grid.
fn render_pair(
    first: &PointerField,
    second: &PointerField,
    geom: &BenchGeometry,
    subsamples: usize,
) -> Vec<[Complex64; 2]> {
    let projector = Projector::new(first, geom, subsamples);
    let a = projector.rows(first, geom);
    let b = projector.rows(second, geom);
    let (s, scale) = (subsamples, projector.scale);
    let zero = [Complex64::new(0.0, 0.0); 2];
    let mut pixels = vec![zero; geom.sensor_px.0 * geom.sensor_px.1];
    projector.for_each_pixel_row(&[&a, &b], &mut pixels, |pixel_row, lines| {
        let (la, lb) = lines.split_at(s);
        for (line_a, line_b) in la.iter().zip(lb) {
            for (p, (ca, cb)) in pixel_row
                .iter_mut()
                .zip(line_a.chunks_exact(s).zip(line_b.chunks_exact(s)))
            {
                for (u, v) in ca.iter().zip(cb) {
                    p[0] += Complex64::new(u.norm_sqr() * scale, v.norm_sqr() * scale);
                    p[1] += u.conj() * v * scale;
                }
            }
        }
    });
    pixels
}

/// Noiseless bench images for every input state at one walk-off strength.
///
/// The post-selected field is `a·E_D + b·E_A` with `E_D` the displaced
/// and `E_A` the undisplaced unit branch, so each image is a fixed
/// quadratic form in `(a, b)`; the two fields are rendered once.
#[derive(Debug, Clone)]
pub struct BenchBasis {
    geometry: BenchGeometry,
    subsamples: usize,
    /// Per pixel: `(|E_D|², |E_A|²)` packed as re/im, and `E_D*·E_A`.
    pixels: Vec<[Complex64; 2]>,
    /// Grid energies of both branches and their overlap.
    norms: (f64, f64, Complex64),
}

impl BenchBasis {
    pub fn new(delta: f64, pointer: &GaussianPointerSpec, config: &BenchConfig) -> Result<Self> {
        config.geometry.validate()?;
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be ≥ 0, got {delta}")));
        }
        if config.subsamples == 0 {
            return Err(Error::InvalidArgument("subsamples must be ≥ 1".into()));
        }
        let grid = config.grid_for(pointer);
        let d = delta / std::f64::consts::SQRT_2;
        let unit = |shift| {
            PostSelectedPointer::from_branches(
                vec![crate::pointer::Branch {
                    amplitude: Complex64::new(1.0, 0.0),
                    shift,
                }],
                *pointer,
            )
        };
        let (shifted, centered) = (unit((d, d)), unit((0.0, 0.0)));
        grid.check(&shifted)?;
        grid.check(&centered)?;
        let fd = PointerField::sample(&shifted, &grid);
        let fa = PointerField::sample(&centered, &grid);
        let cell = fd.dx() * fd.dy();
        let overlap: Complex64 =
            fd.data().iter().zip(fa.data()).map(|(u, v)| u.conj() * v).sum::<Complex64>() * cell;
        Ok(Self {
            pixels: render_pair(&fd, &fa, &config.geometry, config.subsamples),
            geometry: config.geometry.clone(),
            subsamples: config.subsamples,
            norms: (fd.norm(), fa.norm(), overlap),
        })
    }

    /// Branch amplitudes `(⟨H|D⟩·c_D, ⟨H|A⟩·c_A)` after the polarizer.
    fn amplitudes(psi: &PolarizationState) -> (Complex64, Complex64) {
        let h = PolarizationState::horizontal();
        (
            h.inner(&PolarizationState::diagonal()) * psi.c_d(),
            h.inner(&PolarizationState::anti_diagonal()) * psi.c_a(),
        )
    }

    /// Same contract as [`simulate_bench`].
    pub fn image(&self, psi: &PolarizationState) -> Result<SensorImage> {
        let (a, b) = Self::amplitudes(psi);
        let (na, nb) = (a.norm_sqr(), b.norm_sqr());
        let cross = a.conj() * b;
        let data: Vec<f64> = self
            .pixels
            .iter()
            .map(|[diag, ab]| (na * diag.re + nb * diag.im + 2.0 * (cross * ab).re).max(0.0))
            .collect();
        let norm = na * self.norms.0 + nb * self.norms.1 + 2.0 * (cross * self.norms.2).re;
        if !(norm > 0.0) {
            return Err(Error::PostSelectionSingular { overlap: norm.max(0.0).sqrt() });
        }
        let image = SensorImage::new(self.geometry.clone(), data, 1.0, self.subsamples)?;
        let clipped = (norm - image.total()) / norm;
        if clipped > MAX_CLIPPED_FRACTION {
            return Err(Error::SensorOverflow { fraction: clipped });
        }
        Ok(image)
    }
}

/// Grid-rendered image statistics compared with the closed-form moments
/// mapped through the bench geometry. Pixel units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub grid_centroid: (f64, f64),
    pub oracle_centroid: (f64, f64),
    /// 1/e² half-widths (twice the standard deviation of the pixel index).
    pub grid_width: (f64, f64),
    pub oracle_width: (f64, f64),
    /// Relative difference between the image total and the grid energy.
    pub energy_defect: f64,
}

impl OracleReport {
    pub fn centroid_discrepancy(&self) -> f64 {
        (self.grid_centroid.0 - self.oracle_centroid.0)
            .abs()
            .max((self.grid_centroid.1 - self.oracle_centroid.1).abs())
    }

    pub fn width_discrepancy(&self) -> f64 {
        (self.grid_width.0 - self.oracle_width.0)
            .abs()
            .max((self.grid_width.1 - self.oracle_width.1).abs())
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.centroid_discrepancy().max(self.width_discrepancy())
    }
}

/// Renders the bench image and checks it against [`exact_moments`].
///
/// The predicted pixel-index variance includes the `(1 − 1/s²)/12` spread
/// of the midpoint rule's sample offsets within a pixel.
pub fn grid_vs_oracle(
    psi: &PolarizationState,
    delta: f64,
    pointer: &GaussianPointerSpec,
    config: &BenchConfig,
) -> Result<OracleReport> {
    let post = bench_pointer(psi, delta, pointer)?;
    let image = image_pointer(&post, config)?;
    let grid = config.grid_for(pointer);
    let norm = PointerField::sample(&post, &grid).norm();
    image_vs_oracle(&image, &post, norm)
}

pub(crate) fn image_vs_oracle(
    image: &SensorImage,
    post: &PostSelectedPointer,
    grid_norm: f64,
) -> Result<OracleReport> {
    let geom = image.geometry();
    let moments = exact_moments(post);
    let m = geom.magnification();
    let b = geom.momentum_scale();
    let s = image.subsamples() as f64;
    let spread = (1.0 - 1.0 / (s * s)) / 12.0;
    let px2 = geom.pitch * geom.pitch;

    let centroid = image.centroid()?;
    let (vx, vy) = image.index_variance()?;
    Ok(OracleReport {
        grid_centroid: centroid,
        oracle_centroid: (
            geom.pixel_x(m * moments.mean_x),
            geom.pixel_y(b * moments.mean_ky),
        ),
        grid_width: (2.0 * vx.sqrt(), 2.0 * vy.sqrt()),
        oracle_width: (
            2.0 * (m * m * moments.var_x / px2 + spread).sqrt(),
            2.0 * (b * b * moments.var_ky / px2 + spread).sqrt(),
        ),
        energy_defect: (image.total() - grid_norm).abs() / grid_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deg;
    use crate::jones::prepare_state;

    /// A reduced bench (10× pitch, smaller sensor) with the same optics.
    pub(crate) fn small_config() -> BenchConfig {
        BenchConfig {
            geometry: BenchGeometry {
                pitch: 22e-6,
                sensor_px: (256, 192),
                ..BenchGeometry::default()
            },
            grid: None,
            subsamples: 2,
        }
    }

    fn pointer() -> GaussianPointerSpec {
        GaussianPointerSpec::centered(306e-6).unwrap()
    }

    fn small(mut c: BenchConfig, n: usize) -> BenchConfig {
        c.grid = Some(GridSpec::for_pointer(&pointer(), n, n));
        c
    }

    #[test]
    fn default_geometry_derived_quantities() {
        let g = BenchGeometry::default();
        assert!((g.magnification() - 1.2).abs() < 1e-12);
        assert!((g.momentum_scale() - 633e-9 / (2.0 * PI)).abs() < 1e-20);
    }

    #[test]
    fn anti_diagonal_image_is_centered() {
        let c = small(small_config(), 256);
        let img = simulate_bench(&PolarizationState::anti_diagonal(), 163e-6, &pointer(), &c).unwrap();
        let (cx, cy) = img.centroid().unwrap();
        assert!((cx - 127.5).abs() < 1e-9, "{cx}");
        assert!((cy - 95.5).abs() < 1e-9, "{cy}");
        assert!((img.total() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn diagonal_image_is_displaced_along_x_only() {
        let c = small(small_config(), 256);
        let delta = 163e-6;
        let img = simulate_bench(&PolarizationState::diagonal(), delta, &pointer(), &c).unwrap();
        let (cx, cy) = img.centroid().unwrap();
        let shift = delta * 1.2 / std::f64::consts::SQRT_2 / 22e-6;
        assert!((cx - 127.5 - shift).abs() < 1e-9);
        assert!((cy - 95.5).abs() < 1e-9);
    }

    #[test]
    fn superposition_interferes() {
        // Coherent two-branch image differs from the incoherent sum of branch images.
        let c = small(small_config(), 256);
        let psi = prepare_state(deg(10.0));
        let post = bench_pointer(&psi, 163e-6, &pointer()).unwrap();
        let coherent = image_pointer(&post, &c).unwrap();
        let mut incoherent = vec![0.0; coherent.data().len()];
        for b in post.branches() {
            let single = PostSelectedPointer::from_branches(vec![*b], *post.spec());
            let img = image_pointer(&single, &c).unwrap();
            incoherent.iter_mut().zip(img.data()).for_each(|(a, v)| *a += v);
        }
        let diff = coherent
            .data()
            .iter()
            .zip(&incoherent)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let peak = coherent.data().iter().cloned().fold(0.0, f64::max);
        assert!(diff > 1e-3 * peak);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let mut c = small_config();
        c.grid = Some(GridSpec::for_pointer(&pointer(), 128, 128));
        let err = simulate_bench(&PolarizationState::diagonal(), 163e-6, &pointer(), &c).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse(_)));
        c.grid = Some(GridSpec {
            nx: 256,
            ny: 256,
            extent_x: 6.0 * 306e-6,
            extent_y: 16.0 * 306e-6,
        });
        assert!(matches!(
            simulate_bench(&PolarizationState::diagonal(), 0.0, &pointer(), &c),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn small_sensor_overflows() {
        let mut c = small(small_config(), 256);
        c.geometry.sensor_px = (40, 192);
        assert!(matches!(
            simulate_bench(&PolarizationState::anti_diagonal(), 0.0, &pointer(), &c),
            Err(Error::SensorOverflow { .. })
        ));
    }

    #[test]
    fn oracle_agreement_on_small_bench() {
        let c = small(small_config(), 256);
        for theta in [0.0, 10.0, 45.0, 70.0] {
            let r = grid_vs_oracle(&prepare_state(deg(theta)), 163e-6, &pointer(), &c).unwrap();
            assert!(r.centroid_discrepancy() < 1e-6, "θ={theta} {r:?}");
            assert!(r.width_discrepancy() < 1e-3, "θ={theta} {r:?}");
            assert!(r.energy_defect < 1e-9, "θ={theta} {r:?}");
        }
    }

    #[test]
    fn refining_grid_does_not_increase_discrepancy() {
        // Spectral sampling reaches the pixel-quadrature floor early, so
        // successive refinements may only stall, never grow.
        let psi = prepare_state(deg(6.0));
        let mut last = f64::INFINITY;
        for n in [256usize, 512, 1024] {
            let c = small(small_config(), n);
            let r = grid_vs_oracle(&psi, 163e-6, &pointer(), &c).unwrap();
            let d = r.max_discrepancy();
            assert!(d <= last + 1e-12, "n={n}: {d} after {last}");
            last = d;
        }
    }

    #[test]
    fn basis_images_match_direct_rendering() {
        let c = small(small_config(), 256);
        let basis = BenchBasis::new(163e-6, &pointer(), &c).unwrap();
        for theta in [0.0, 10.0, 22.5, 61.0] {
            let psi = prepare_state(deg(theta));
            let direct = simulate_bench(&psi, 163e-6, &pointer(), &c).unwrap();
            let fast = basis.image(&psi).unwrap();
            let peak = direct.data().iter().cloned().fold(0.0, f64::max);
            let diff = direct
                .data()
                .iter()
                .zip(fast.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12 * peak.max(1e-300) + 1e-18, "θ={theta}: {diff}");
        }
    }
}
