//! Least-squares Gaussian fit of a 1D profile.

use crate::{Error, Result};

/// Fits below this coefficient of determination are rejected.
pub const MIN_R_SQUARED: f64 = 0.99;

/// `amplitude·exp(−2(n − center)²/half_width²)`, i.e. `half_width` is the
/// 1/e² half-width in index units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center: f64,
    pub half_width: f64,
    pub r_squared: f64,
}

impl GaussianFit {
    pub fn eval(&self, n: f64) -> f64 {
        let u = (n - self.center) / self.half_width;
        self.amplitude * (-2.0 * u * u).exp()
    }
}

fn model_and_jacobian(p: [f64; 3], n: f64) -> (f64, [f64; 3]) {
    let [a, mu, w] = p;
    let u = n - mu;
    let e = (-2.0 * u * u / (w * w)).exp();
    let f = a * e;
    (f, [e, f * 4.0 * u / (w * w), f * 4.0 * u * u / (w * w * w)])
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xi) in x.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        *xi = det(mc) / d;
    }
    Some(x)
}

/// Levenberg–Marquardt fit to `profile[n]`, started from the moments.
/// `axis` only labels the error.
pub fn fit_gaussian(profile: &[f64], axis: char) -> Result<GaussianFit> {
    let failed = |r_squared| Error::FitFailed { axis, r_squared };
    let total: f64 = profile.iter().sum();
    if !(total > 0.0) || profile.len() < 4 {
        return Err(failed(f64::NAN));
    }
    let idx = |i: usize| i as f64;
    let mean = profile.iter().enumerate().map(|(i, v)| idx(i) * v).sum::<f64>() / total;
    let var = profile
        .iter()
        .enumerate()
        .map(|(i, v)| (idx(i) - mean).powi(2) * v)
        .sum::<f64>()
        / total;
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let mut p = [peak, mean, 2.0 * var.sqrt().max(0.5)];

    let cost = |p: [f64; 3]| -> f64 {
        profile
            .iter()
            .enumerate()
            .map(|(i, y)| (y - model_and_jacobian(p, idx(i)).0).powi(2))
            .sum()
    };
    let mut c = cost(p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (i, y) in profile.iter().enumerate() {
            let (f, j) = model_and_jacobian(p, idx(i));
            let r = y - f;
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] *= 1.0 + lambda;
            }
            let Some(step) = solve3(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], (p[2] + step[2]).abs()];
            let ct = cost(trial);
            if ct < c {
                let rel = step
                    .iter()
                    .zip(&p)
                    .map(|(s, v)| (s / v.abs().max(1e-300)).abs())
                    .fold(0.0, f64::max);
                p = trial;
                c = ct;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                if rel < 1e-13 {
                    lambda = 1e12;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || lambda >= 1e12 {
            break;
        }
    }

    let mean_y = total / profile.len() as f64;
    let ss_tot: f64 = profile.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - c / ss_tot } else { f64::NAN };
    if !(r_squared >= MIN_R_SQUARED) || !(p[2] > 0.0) {
        return Err(failed(r_squared));
    }
    Ok(GaussianFit {
        amplitude: p[0],
        center: p[1],
        half_width: p[2],
        r_squared,
    })
}
