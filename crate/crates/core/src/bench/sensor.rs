//! Pixelated sensor images and their serialization.

use std::io::{Read, Write};

use super::BenchGeometry;
use crate::{csv_float, Error, Result};

/// Expected (or counted) photons per pixel, row-major with `n_y` slow.
///
/// `exposure` is the number of input photons the image represents; a
/// noiseless image rendered for one photon has `exposure = 1` and sums to
/// the post-selection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    exposure: f64,
    subsamples: usize,
    geometry: BenchGeometry,
}

impl SensorImage {
    pub fn new(
        geometry: BenchGeometry,
        data: Vec<f64>,
        exposure: f64,
        subsamples: usize,
    ) -> Result<Self> {
        let (width, height) = geometry.sensor_px;
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "image has {} pixels, sensor has {}×{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("negative or non-finite pixel {bad}")));
        }
        Ok(Self {
            width,
            height,
            data,
            exposure,
            subsamples,
            geometry,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn exposure(&self) -> f64 {
        self.exposure
    }

    /// Quadrature points per pixel along each axis used when rendering.
    pub fn subsamples(&self) -> usize {
        self.subsamples
    }

    pub fn geometry(&self) -> &BenchGeometry {
        &self.geometry
    }

    pub fn pixel(&self, n_x: usize, n_y: usize) -> f64 {
        self.data[n_y * self.width + n_x]
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// The same image scaled to a different number of input photons.
    pub fn with_exposure(&self, exposure: f64) -> Self {
        let s = exposure / self.exposure;
        Self {
            data: self.data.iter().map(|v| v * s).collect(),
            exposure,
            ..self.clone()
        }
    }

    /// Pixel-wise mean of several images of the same sensor.
    pub fn average(images: &[SensorImage]) -> Result<SensorImage> {
        let first = images
            .first()
            .ok_or_else(|| Error::InvalidArgument("no images to average".into()))?;
        let mut data = vec![0.0; first.data.len()];
        for img in images {
            if img.data.len() != data.len() {
                return Err(Error::InvalidArgument("images differ in size".into()));
            }
            data.iter_mut().zip(&img.data).for_each(|(a, b)| *a += b);
        }
        let n = images.len() as f64;
        data.iter_mut().for_each(|a| *a /= n);
        Ok(Self {
            data,
            exposure: images.iter().map(|i| i.exposure).sum::<f64>() / n,
            ..first.clone()
        })
    }

    /// Sums over rows, indexed by `n_x`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.width];
        for row in self.data.chunks_exact(self.width) {
            m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        m
    }

    /// Sums over columns, indexed by `n_y`.
    pub fn marginal_y(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.width)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// Intensity-weighted mean pixel index `(n_x, n_y)`.
    pub fn centroid(&self) -> Result<(f64, f64)> {
        Ok((mean_index(&self.marginal_x())?, mean_index(&self.marginal_y())?))
    }

    /// Intensity-weighted variance of the pixel index, per axis.
    pub fn index_variance(&self) -> Result<(f64, f64)> {
        Ok((
            variance_index(&self.marginal_x())?,
            variance_index(&self.marginal_y())?,
        ))
    }

    /// Writes a binary 16-bit PGM (`P5`, big-endian samples) scaled so the
    /// brightest pixel is 65535. Row 0 is `n_y = 0`.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let peak = self.data.iter().cloned().fold(0.0, f64::max);
        let scale = if peak > 0.0 { 65535.0 / peak } else { 0.0 };
        write!(out, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let mut bytes = Vec::with_capacity(self.data.len() * 2);
        for v in &self.data {
            let q = (v * scale).round().clamp(0.0, 65535.0) as u16;
            bytes.extend_from_slice(&q.to_be_bytes());
        }
        out.write_all(&bytes)
    }

    /// Writes `n_x,n_y,intensity` rows for every pixel, `n_x` fastest.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n_x,n_y,intensity")?;
        for (n_y, row) in self.data.chunks_exact(self.width).enumerate() {
            for (n_x, v) in row.iter().enumerate() {
                writeln!(out, "{n_x},{n_y},{}", csv_float(*v))?;
            }
        }
        Ok(())
    }

    /// Reads the CSV written by [`SensorImage::write_csv`]. Pixels that are
    /// absent are zero.
    pub fn read_csv<R: Read>(
        input: R,
        geometry: BenchGeometry,
        exposure: f64,
        subsamples: usize,
    ) -> Result<Self> {
        const HEADER: [&str; 3] = ["n_x", "n_y", "intensity"];
        let (width, height) = geometry.sensor_px;
        let mut data = vec![0.0; width * height];
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers().map_err(|e| csv_error("image csv", e))?;
        if headers.iter().ne(HEADER) {
            return Err(Error::Parse {
                format: "image csv",
                line: 1,
                message: "expected header `n_x,n_y,intensity`".into(),
            });
        }
        for record in reader.records() {
            let record = record.map_err(|e| csv_error("image csv", e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let err = |message: String| Error::Parse {
                format: "image csv",
                line,
                message,
            };
            let n_x: usize = record[0].parse().map_err(|e| err(format!("n_x: {e}")))?;
            let n_y: usize = record[1].parse().map_err(|e| err(format!("n_y: {e}")))?;
            let v: f64 = record[2].parse().map_err(|e| err(format!("intensity: {e}")))?;
            if n_x >= width || n_y >= height {
                return Err(err(format!("pixel ({n_x}, {n_y}) outside sensor")));
            }
            data[n_y * width + n_x] = v;
        }
        Self::new(geometry, data, exposure, subsamples)
    }
}

/// Maps a reader error to [`Error::Parse`] with its line number.
pub(crate) fn csv_error(format: &'static str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        format,
        line,
        message: e.to_string(),
    }
}

fn mean_index(weights: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyImage);
    }
    Ok(weights
        .iter()
        .enumerate()
        .map(|(i, w)| i as f64 * w)
        .sum::<f64>()
        / total)
}

fn variance_index(weights: &[f64]) -> Result<f64> {
    let mean = mean_index(weights)?;
    let total: f64 = weights.iter().sum();
    Ok(weights
        .iter()
        .enumerate()
        .map(|(i, w)| (i as f64 - mean).powi(2) * w)
        .sum::<f64>()
        / total)
}
