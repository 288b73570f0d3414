//! Photon shot noise.
//!
//! Pixel counts are independent Poisson variables with means proportional
//! to the noiseless image. For sparse exposures this is sampled as a
//! Poisson total followed by placing each photon with an alias table, which
//! has the same joint distribution and costs O(photons) instead of
//! O(pixels) Poisson draws.

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};

use super::SensorImage;
use crate::rng::{rng_for, Rng};
use crate::{Error, Result};

/// Walker/Vose alias table over pixel indices.
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        let mut prob: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias = vec![0u32; n];
        let mut small = Vec::new();
        let mut large = Vec::new();
        for (i, p) in prob.iter().enumerate() {
            if *p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        Self { prob, alias }
    }

    fn draw(&self, rng: &mut Rng) -> usize {
        let u = rng.random::<f64>() * self.prob.len() as f64;
        let i = (u as usize).min(self.prob.len() - 1);
        if u - (i as f64) < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// Reusable shot-noise sampler for one noiseless image.
pub struct PhotonSampler<'a> {
    image: &'a SensorImage,
    table: Option<AliasTable>,
    fraction: f64,
}

const SPARSE_PHOTONS_PER_PIXEL: f64 = 8.0;

impl<'a> PhotonSampler<'a> {
    pub fn new(image: &'a SensorImage) -> Self {
        let fraction = image.total() / image.exposure();
        Self {
            image,
            table: None,
            fraction,
        }
    }

    /// Draws a counts image for `n_photons` input photons.
    pub fn sample(&mut self, n_photons: u64, seed: u64) -> Result<SensorImage> {
        if n_photons == 0 {
            return Err(Error::InvalidArgument("n_photons must be at least 1".into()));
        }
        let mut rng = rng_for(seed, &[n_photons]);
        let expected = n_photons as f64 * self.fraction;
        let pixels = self.image.data().len();
        let mut counts = vec![0.0; pixels];
        if expected <= 0.0 {
            // nothing reaches the sensor
        } else if expected <= SPARSE_PHOTONS_PER_PIXEL * pixels as f64 {
            let total = Poisson::new(expected)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(&mut rng) as u64;
            let table = self
                .table
                .get_or_insert_with(|| AliasTable::new(self.image.data()));
            for _ in 0..total {
                counts[table.draw(&mut rng)] += 1.0;
            }
        } else {
            let scale = n_photons as f64 / self.image.exposure();
            for (c, mean) in counts.iter_mut().zip(self.image.data()) {
                let lambda = mean * scale;
                if lambda > 0.0 {
                    *c = Poisson::new(lambda)
                        .map_err(|e| Error::InvalidArgument(e.to_string()))?
                        .sample(&mut rng);
                }
            }
        }
        SensorImage::new(
            self.image.geometry().clone(),
            counts,
            n_photons as f64,
            self.image.subsamples(),
        )
    }
}

/// Pixel-wise Poisson counts with `n_photons` input photons.
pub fn sample_photons(image: &SensorImage, n_photons: u64, seed: u64) -> Result<SensorImage> {
    PhotonSampler::new(image).sample(n_photons, seed)
}
