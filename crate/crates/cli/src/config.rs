//! Experiment configuration: flat `key = value` files with `--key value`
//! overrides on the command line.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use weakval::bench::{BenchConfig, BenchGeometry, GridSpec};
use weakval::pointer::GaussianPointerSpec;
use weakval::readout::SweepConfig;

/// Every accepted key with a one-line description; lengths in meters,
/// angles in degrees.
pub const KEYS: &[(&str, &str)] = &[
    ("wavelength", "optical wavelength [m]"),
    ("f1", "first relay lens focal length [m]"),
    ("f2", "second relay lens focal length [m]"),
    ("f_ft", "cylindrical lens focal length [m]"),
    ("pitch", "sensor pixel pitch [m]"),
    ("sensor_width", "sensor width [px]"),
    ("sensor_height", "sensor height [px]"),
    ("width", "pointer 1/e² intensity half-width w [m]"),
    ("delta", "walk-off displacement δ [m]"),
    ("theta_start", "first waveplate angle [deg]"),
    ("theta_end", "last waveplate angle [deg]"),
    ("theta_step", "waveplate angle step [deg]"),
    ("theta", "waveplate angle for `image` [deg]"),
    ("trials", "trials per angle"),
    ("images_per_trial", "images averaged per trial"),
    ("photons", "input photons per image, or `none` for noiseless"),
    ("seed", "base random seed"),
    ("grid_nx", "crystal-plane samples along x"),
    ("grid_ny", "crystal-plane samples along y"),
    ("grid_extent_x", "crystal-plane extent along x [m], default 16w"),
    ("grid_extent_y", "crystal-plane extent along y [m], default 16w"),
    ("subsamples", "midpoint-rule points per pixel per axis"),
    ("out", "output directory"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: BenchGeometry,
    pub width: f64,
    pub delta: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    pub theta_step: f64,
    pub theta: f64,
    pub trials: usize,
    pub images_per_trial: usize,
    pub photons: Option<u64>,
    pub seed: u64,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub grid_extent_x: Option<f64>,
    pub grid_extent_y: Option<f64>,
    pub subsamples: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sweep = SweepConfig::default();
        Self {
            geometry: BenchGeometry::default(),
            width: sweep.pointer.width(),
            delta: sweep.delta,
            theta_start: sweep.theta_start,
            theta_end: sweep.theta_end,
            theta_step: sweep.theta_step,
            theta: 0.0,
            trials: sweep.trials,
            images_per_trial: sweep.images_per_trial,
            photons: sweep.photons,
            seed: sweep.seed,
            grid_nx: GridSpec::DEFAULT_SAMPLES,
            grid_ny: GridSpec::DEFAULT_SAMPLES,
            grid_extent_x: None,
            grid_extent_y: None,
            subsamples: sweep.bench.subsamples,
            out: PathBuf::from("."),
        }
    }
}

fn parse<T: FromStr>(value: &str) -> Result<T>
where
    T::Err: Display,
{
    value.parse::<T>().map_err(|e| anyhow::anyhow!("{e}"))
}

/// Non-negative integer, also written as e.g. `1e6`.
fn parse_count(value: &str) -> Result<u64> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = parse(value)?;
    if !(v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63)) {
        bail!("expected a non-negative integer");
    }
    Ok(v as u64)
}

impl ExperimentConfig {
    /// Applies one setting; errors name neither source nor key, callers add both.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let g = &mut self.geometry;
        match key {
            "wavelength" => g.wavelength = parse(value)?,
            "f1" => g.f1 = parse(value)?,
            "f2" => g.f2 = parse(value)?,
            "f_ft" => g.f_ft = parse(value)?,
            "pitch" => g.pitch = parse(value)?,
            "sensor_width" => g.sensor_px.0 = parse_count(value)? as usize,
            "sensor_height" => g.sensor_px.1 = parse_count(value)? as usize,
            "width" => self.width = parse(value)?,
            "delta" => self.delta = parse(value)?,
            "theta_start" => self.theta_start = parse(value)?,
            "theta_end" => self.theta_end = parse(value)?,
            "theta_step" => self.theta_step = parse(value)?,
            "theta" => self.theta = parse(value)?,
            "trials" => self.trials = parse_count(value)? as usize,
            "images_per_trial" => self.images_per_trial = parse_count(value)? as usize,
            "photons" => {
                self.photons = match value {
                    "none" | "noiseless" => None,
                    v => Some(parse_count(v)?),
                }
            }
            "seed" => self.seed = parse(value)?,
            "grid_nx" => self.grid_nx = parse_count(value)? as usize,
            "grid_ny" => self.grid_ny = parse_count(value)? as usize,
            "grid_extent_x" => self.grid_extent_x = Some(parse(value)?),
            "grid_extent_y" => self.grid_extent_y = Some(parse(value)?),
            "subsamples" => self.subsamples = parse_count(value)? as usize,
            "out" => self.out = PathBuf::from(value),
            _ => bail!("unknown key `{key}`"),
        }
        Ok(())
    }

    /// Applies a config file's contents; `origin` labels diagnostics.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            let Some((key, value)) = line.split_once('=') else {
                bail!("{at}: expected `key = value`, got `{line}`");
            };
            let key = key.trim();
            if !KEYS.iter().any(|(k, _)| *k == key) {
                bail!("{at}: unknown key `{key}`");
            }
            if seen.contains(&key) {
                bail!("{at}: duplicate key `{key}`");
            }
            seen.push(key);
            self.set(key, value)
                .with_context(|| format!("{at}: invalid value for `{key}`"))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Field-level checks that do not need a rendered image.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        for (key, v) in [
            ("wavelength", g.wavelength),
            ("f1", g.f1),
            ("f2", g.f2),
            ("f_ft", g.f_ft),
            ("pitch", g.pitch),
            ("width", self.width),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bail!("{key} must be positive, got {v}");
            }
        }
        for (key, v) in [("grid_extent_x", self.grid_extent_x), ("grid_extent_y", self.grid_extent_y)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    bail!("{key} must be positive, got {v}");
                }
            }
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            bail!("delta must be non-negative, got {}", self.delta);
        }
        for (key, v) in [
            ("sensor_width", g.sensor_px.0),
            ("sensor_height", g.sensor_px.1),
            ("trials", self.trials),
            ("images_per_trial", self.images_per_trial),
            ("subsamples", self.subsamples),
        ] {
            if v == 0 {
                bail!("{key} must be at least 1");
            }
        }
        for (key, v) in [("grid_nx", self.grid_nx), ("grid_ny", self.grid_ny)] {
            if v < 2 {
                bail!("{key} must be at least 2");
            }
        }
        if !self.theta.is_finite() {
            bail!("theta must be finite");
        }
        if self.photons == Some(0) {
            bail!("photons must be at least 1 (or `none` for noiseless)");
        }
        self.sweep().thetas().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(())
    }

    pub fn pointer(&self) -> GaussianPointerSpec {
        GaussianPointerSpec::centered(self.width).expect("width validated")
    }

    pub fn grid(&self) -> GridSpec {
        let default = GridSpec::for_pointer(&self.pointer(), self.grid_nx, self.grid_ny);
        GridSpec {
            extent_x: self.grid_extent_x.unwrap_or(default.extent_x),
            extent_y: self.grid_extent_y.unwrap_or(default.extent_y),
            ..default
        }
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            geometry: self.geometry.clone(),
            grid: Some(self.grid()),
            subsamples: self.subsamples,
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            bench: self.bench(),
            pointer: GaussianPointerSpec::centered(self.width)
                .unwrap_or_else(|_| SweepConfig::default().pointer),
            delta: self.delta,
            theta_start: self.theta_start,
            theta_end: self.theta_end,
            theta_step: self.theta_step,
            trials: self.trials,
            images_per_trial: self.images_per_trial,
            photons: self.photons,
            seed: self.seed,
            roi: None,
        }
    }

    /// True when the optics, pointer and coupling are the built-in defaults.
    pub fn is_reference_setup(&self) -> bool {
        let d = Self::default();
        self.geometry == d.geometry && self.width == d.width && self.delta == d.delta
    }
}
