//! Waveplate-angle sweep: images, extraction, trial statistics and
//! reconstructed amplitudes per angle.

use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use super::calibration::{calibrate, centroid_shifts, centroid_shifts_in, extract_weak_value};
use super::{CalibrationResult, Roi, WeakValueEstimate};
use crate::bench::{csv_error, BenchBasis, BenchConfig, PhotonSampler, SensorImage};
use crate::jones::{predicted_weak_value, prepare_state, reconstruct_state, PolarizationState};
use crate::pointer::{
    couple_and_postselect, exact_moments, weak_value_from_moments, CouplingSpec,
    GaussianPointerSpec,
};
use crate::rng::derive_seed;
use crate::{csv_float, deg, Error, Result};

pub const SWEEP_CSV_HEADER: &str =
    "theta_deg,re_w,se_re,im_w,se_im,c_d_re,c_d_im,c_a_re,c_a_im,status";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub bench: BenchConfig,
    pub pointer: GaussianPointerSpec,
    /// Walk-off displacement in meters.
    pub delta: f64,
    /// Angles in degrees.
    pub theta_start: f64,
    pub theta_end: f64,
    pub theta_step: f64,
    pub trials: usize,
    /// Images averaged per trial.
    pub images_per_trial: usize,
    /// `None` for noiseless images.
    pub photons: Option<u64>,
    pub seed: u64,
    pub roi: Option<Roi>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            bench: BenchConfig::default(),
            pointer: GaussianPointerSpec::centered(306e-6).expect("positive width"),
            delta: 163e-6,
            theta_start: 0.0,
            theta_end: 90.0,
            theta_step: 3.0,
            trials: 7,
            images_per_trial: 3,
            photons: None,
            seed: 0,
            roi: None,
        }
    }
}

impl SweepConfig {
    /// Sweep angles in degrees; the step must divide the range.
    pub fn thetas(&self) -> Result<Vec<f64>> {
        let (a, b, s) = (self.theta_start, self.theta_end, self.theta_step);
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidArgument(format!("theta_step must be positive, got {s}")));
        }
        if !(a.is_finite() && b.is_finite() && b >= a) {
            return Err(Error::InvalidArgument(format!(
                "theta range [{a}, {b}] must be finite and increasing"
            )));
        }
        let steps = (b - a) / s;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta_step {s} does not divide the range [{a}, {b}]"
            )));
        }
        Ok((0..=n as usize).map(|i| a + i as f64 * s).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.thetas()?;
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.images_per_trial == 0 {
            return Err(Error::InvalidArgument("images_per_trial must be at least 1".into()));
        }
        if self.photons == Some(0) {
            return Err(Error::InvalidArgument("photons must be at least 1".into()));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be ≥ 0, got {}", self.delta)));
        }
        self.bench.geometry.validate()
    }
}

/// First-order weak value predicted from the closed-form moments at
/// finite coupling, for the state prepared at `theta` (radians).
pub fn oracle_weak_value(theta: f64, delta: f64, pointer: &GaussianPointerSpec) -> Result<Complex64> {
    let coupling = CouplingSpec::walk_off(delta)?;
    let post = couple_and_postselect(
        &prepare_state(theta),
        &coupling,
        pointer,
        &PolarizationState::horizontal(),
    )?;
    weak_value_from_moments(&exact_moments(&post), &coupling, pointer)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointStatus::Ok => f.write_str("ok"),
            PointStatus::Failed(msg) => {
                let clean: String = msg
                    .chars()
                    .map(|c| if c == ',' || c.is_control() { ';' } else { c })
                    .collect();
                write!(f, "failed: {clean}")
            }
        }
    }
}

impl PointStatus {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(PointStatus::Ok),
            _ => s
                .strip_prefix("failed: ")
                .map(|m| PointStatus::Failed(m.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta_deg: f64,
    pub estimate: WeakValueEstimate,
    pub c_d: Complex64,
    pub c_a: Complex64,
    pub status: PointStatus,
}

impl SweepRow {
    fn failed(theta_deg: f64, err: &Error) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        Self {
            theta_deg,
            estimate: WeakValueEstimate {
                value: nan,
                se_re: f64::NAN,
                se_im: f64::NAN,
                n_trials: 0,
            },
            c_d: nan,
            c_a: nan,
            status: PointStatus::Failed(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == PointStatus::Ok
    }
}

/// Deviations of the `ok` rows from a reference curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSummary {
    pub max_re: f64,
    pub max_im: f64,
    pub rms_re: f64,
    pub rms_im: f64,
    /// Largest `|w − reference|`.
    pub max_abs: f64,
    pub points: usize,
}

impl DeviationSummary {
    fn from_pairs(pairs: impl Iterator<Item = (Complex64, Complex64)>) -> Self {
        let mut s = Self {
            max_re: 0.0,
            max_im: 0.0,
            rms_re: 0.0,
            rms_im: 0.0,
            max_abs: 0.0,
            points: 0,
        };
        for (w, r) in pairs {
            let d = w - r;
            s.max_re = s.max_re.max(d.re.abs());
            s.max_im = s.max_im.max(d.im.abs());
            s.max_abs = s.max_abs.max(d.norm());
            s.rms_re += d.re * d.re;
            s.rms_im += d.im * d.im;
            s.points += 1;
        }
        if s.points > 0 {
            s.rms_re = (s.rms_re / s.points as f64).sqrt();
            s.rms_im = (s.rms_im / s.points as f64).sqrt();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// The calibration used; absent for results read from CSV.
    pub calibration: Option<CalibrationResult>,
}

impl SweepResult {
    pub fn failed_points(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Deviation from `reference(theta_radians)`.
    pub fn deviation_from(&self, reference: impl Fn(f64) -> Complex64) -> DeviationSummary {
        DeviationSummary::from_pairs(
            self.rows
                .iter()
                .filter(|r| r.is_ok())
                .map(|r| (r.estimate.value, reference(deg(r.theta_deg)))),
        )
    }

    /// Deviation from the ideal theory curve.
    pub fn deviation_from_theory(&self) -> DeviationSummary {
        self.deviation_from(predicted_weak_value)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SWEEP_CSV_HEADER}")?;
        for r in &self.rows {
            let e = &r.estimate;
            let f = [
                r.theta_deg,
                e.value.re,
                e.se_re,
                e.value.im,
                e.se_im,
                r.c_d.re,
                r.c_d.im,
                r.c_a.re,
                r.c_a.im,
            ]
            .map(csv_float);
            writeln!(out, "{},{}", f.join(","), r.status)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the CSV of [`SweepResult::write_csv`]. The trial count is not
    /// part of the format and reads back as 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        const FORMAT: &str = "sweep csv";
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers().map_err(|e| csv_error(FORMAT, e))?;
        if headers.iter().ne(SWEEP_CSV_HEADER.split(',')) {
            return Err(Error::Parse {
                format: FORMAT,
                line: 1,
                message: format!("expected header `{SWEEP_CSV_HEADER}`"),
            });
        }
        let mut rows: Vec<SweepRow> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(FORMAT, e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let err = |message: String| Error::Parse {
                format: FORMAT,
                line,
                message,
            };
            let num = |k: usize| -> Result<f64> {
                record[k].parse().map_err(|e| err(format!("field {}: {e}", k + 1)))
            };
            let status = PointStatus::parse(&record[9])
                .ok_or_else(|| err(format!("unknown status `{}`", &record[9])))?;
            let row = SweepRow {
                theta_deg: num(0)?,
                estimate: WeakValueEstimate {
                    value: Complex64::new(num(1)?, num(3)?),
                    se_re: num(2)?,
                    se_im: num(4)?,
                    n_trials: 0,
                },
                c_d: Complex64::new(num(5)?, num(6)?),
                c_a: Complex64::new(num(7)?, num(8)?),
                status,
            };
            if let Some(prev) = rows.last() {
                if !(row.theta_deg > prev.theta_deg) {
                    return Err(err("theta_deg must be strictly increasing".into()));
                }
            }
            rows.push(row);
        }
        Ok(Self {
            rows,
            calibration: None,
        })
    }
}

/// Rendered basis and calibration for one configuration, reusable across
/// photon budgets and seeds.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    config: SweepConfig,
    thetas: Vec<f64>,
    basis: BenchBasis,
    calibration: CalibrationResult,
}

impl SweepPlan {
    /// Calibrates from noiseless `|A⟩`/`|D⟩` references.
    pub fn new(config: &SweepConfig) -> Result<Self> {
        config.validate()?;
        let basis = BenchBasis::new(config.delta, &config.pointer, &config.bench)?;
        let reference = basis.image(&PolarizationState::anti_diagonal())?;
        let displaced = basis.image(&PolarizationState::diagonal())?;
        Ok(Self {
            thetas: config.thetas()?,
            calibration: calibrate(&[reference], &displaced)?,
            config: config.clone(),
            basis,
        })
    }

    pub fn calibration(&self) -> &CalibrationResult {
        &self.calibration
    }

    pub fn basis(&self) -> &BenchBasis {
        &self.basis
    }

    pub fn run(&self) -> SweepResult {
        self.run_with(self.config.photons, self.config.seed)
    }

    /// Every angle is independent; point failures are recorded in the row status.
    pub fn run_with(&self, photons: Option<u64>, seed: u64) -> SweepResult {
        let config = SweepConfig {
            photons,
            seed,
            ..self.config.clone()
        };
        let rows = self
            .thetas
            .par_iter()
            .enumerate()
            .map(|(i, &theta)| {
                sweep_point(&config, &self.basis, &self.calibration, i, theta)
                    .unwrap_or_else(|e| SweepRow::failed(theta, &e))
            })
            .collect();
        SweepResult {
            rows,
            calibration: Some(self.calibration),
        }
    }
}

/// Configuration and calibration errors abort; point failures do not.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    Ok(SweepPlan::new(config)?.run())
}

fn shifts(image: &SensorImage, cal: &CalibrationResult, roi: Option<&Roi>) -> Result<(f64, f64)> {
    match roi {
        Some(r) => centroid_shifts_in(image, cal, r),
        None => centroid_shifts(image, cal),
    }
}

fn sweep_point(
    config: &SweepConfig,
    basis: &BenchBasis,
    cal: &CalibrationResult,
    index: usize,
    theta: f64,
) -> Result<SweepRow> {
    let image = basis.image(&prepare_state(deg(theta)))?;
    let roi = config.roi.as_ref();
    let trials: Vec<Complex64> = match config.photons {
        None => {
            let w = extract_weak_value(shifts(&image, cal, roi)?, cal)?;
            vec![w; config.trials]
        }
        Some(n) => {
            let mut sampler = PhotonSampler::new(&image);
            let mut values = Vec::with_capacity(config.trials);
            for t in 0..config.trials {
                let images = (0..config.images_per_trial)
                    .map(|j| {
                        sampler.sample(n, derive_seed(config.seed, &[index as u64, t as u64, j as u64]))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let averaged = SensorImage::average(&images)?;
                values.push(extract_weak_value(shifts(&averaged, cal, roi)?, cal)?);
            }
            values
        }
    };
    let estimate = WeakValueEstimate::from_trials(&trials)?;
    let rec = reconstruct_state(estimate.value)?;
    Ok(SweepRow {
        theta_deg: theta,
        estimate,
        c_d: rec.state.c_d(),
        c_a: rec.state.c_a(),
        status: PointStatus::Ok,
    })
}
