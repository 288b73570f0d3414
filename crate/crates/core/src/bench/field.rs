//! Pointer amplitudes sampled on a uniform grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::GridSpec;
use crate::jones::{ObservableOp, PolarizationState};
use crate::pointer::{Axis, GaussianPointerSpec, PostSelectedPointer};

/// Complex amplitude on an `nx × ny` grid centered on the optical axis.
///
/// Sample `(i, j)` sits at `x = (j − nx/2)·dx`, `y = (i − ny/2)·dy` and is
/// stored row-major (`y` is the slow index).
#[derive(Debug, Clone, PartialEq)]
pub struct PointerField {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    data: Vec<Complex64>,
}

impl PointerField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            dx: grid.spacing_x(),
            dy: grid.spacing_y(),
            data: vec![Complex64::new(0.0, 0.0); grid.nx * grid.ny],
        }
    }

    /// Samples a closed-form post-selected pointer.
    pub fn sample(pointer: &PostSelectedPointer, grid: &GridSpec) -> Self {
        let mut field = Self::zeros(grid);
        let spec = pointer.spec();
        for b in pointer.branches() {
            let (cx, cy) = pointer.branch_center(b);
            let gx: Vec<f64> = (0..field.nx).map(|j| spec.profile(field.x(j) - cx)).collect();
            let gy: Vec<f64> = (0..field.ny).map(|i| spec.profile(field.y(i) - cy)).collect();
            for (row, &vy) in field.data.chunks_exact_mut(field.nx).zip(&gy) {
                let a = b.amplitude * vy;
                for (v, &vx) in row.iter_mut().zip(&gx) {
                    *v += a * vx;
                }
            }
        }
        field
    }

    /// The initial (uncoupled) Gaussian.
    pub fn gaussian(spec: &GaussianPointerSpec, grid: &GridSpec) -> Self {
        let mut field = Self::zeros(grid);
        let (cx, cy) = spec.center();
        for i in 0..field.ny {
            let vy = spec.profile(field.y(i) - cy);
            for j in 0..field.nx {
                let v = vy * spec.profile(field.x(j) - cx);
                field.data[i * field.nx + j] = Complex64::new(v, 0.0);
            }
        }
        field
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.nx / 2) as f64) * self.dx
    }

    pub fn y(&self, i: usize) -> f64 {
        (i as f64 - (self.ny / 2) as f64) * self.dy
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.nx + j]
    }

    /// `∫|ψ|² dx dy` by the rectangle rule.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx * self.dy
    }

    pub fn normalized(&self) -> Self {
        let s = self.norm().sqrt().recip();
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Unitary DFT along `y` of every column, returning the energy
    /// `Σ|ψ|²` before and after.
    pub fn y_transform_energy(&self) -> (f64, f64) {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(self.ny);
        let before: f64 = self.data.iter().map(|v| v.norm_sqr()).sum();
        let mut column = vec![Complex64::new(0.0, 0.0); self.ny];
        let mut after = 0.0;
        for j in 0..self.nx {
            for (i, c) in column.iter_mut().enumerate() {
                *c = self.data[i * self.nx + j];
            }
            fft.process(&mut column);
            after += column.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        (before, after / self.ny as f64)
    }

    /// Multiplies the spectrum along `axis` by `exp(−i·k·shift)`, which
    /// translates the field by `shift` (periodically).
    pub fn translate(&mut self, axis: Axis, shift: f64) {
        if shift == 0.0 {
            return;
        }
        let (n, step) = match axis {
            Axis::X => (self.nx, self.dx),
            Axis::Y => (self.ny, self.dy),
        };
        let ramp: Vec<Complex64> = (0..n)
            .map(|m| {
                let m = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = 2.0 * PI * m / (n as f64 * step);
                Complex64::from_polar(1.0 / n as f64, -k * shift)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        match axis {
            Axis::X => {
                for row in self.data.chunks_exact_mut(self.nx) {
                    forward.process(row);
                    row.iter_mut().zip(&ramp).for_each(|(v, r)| *v *= r);
                    inverse.process(row);
                }
            }
            Axis::Y => {
                let mut column = vec![Complex64::new(0.0, 0.0); self.ny];
                for j in 0..self.nx {
                    for (i, c) in column.iter_mut().enumerate() {
                        *c = self.data[i * self.nx + j];
                    }
                    forward.process(&mut column);
                    column.iter_mut().zip(&ramp).for_each(|(v, r)| *v *= r);
                    inverse.process(&mut column);
                    for (i, c) in column.iter().enumerate() {
                        self.data[i * self.nx + j] = *c;
                    }
                }
            }
        }
    }
}

/// Polarization ⊗ pointer on the grid: one field per H/V component.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    h: PointerField,
    v: PointerField,
}

impl SpinorField {
    pub fn product(psi: &PolarizationState, pointer: &GaussianPointerSpec, grid: &GridSpec) -> Self {
        let g = PointerField::gaussian(pointer, grid);
        let [ch, cv] = psi.to_hv();
        let scale = |c: Complex64| {
            let mut f = g.clone();
            f.data.iter_mut().for_each(|v| *v *= c);
            f
        };
        Self {
            h: scale(ch),
            v: scale(cv),
        }
    }

    /// Applies `exp(−iδ Â k_axis)` spectrally, branch by branch in the
    /// eigenbasis of `Â`.
    pub fn couple(&self, axis: Axis, strength: f64, observable: &ObservableOp) -> Self {
        let mut h = PointerField::zeros(&self.h.grid());
        let mut v = PointerField::zeros(&self.h.grid());
        for (value, e) in observable.eigen() {
            let mut proj = PointerField::zeros(&self.h.grid());
            for ((p, a), b) in proj.data.iter_mut().zip(&self.h.data).zip(&self.v.data) {
                *p = e[0].conj() * a + e[1].conj() * b;
            }
            proj.translate(axis, strength * value);
            for ((p, oh), ov) in proj.data.iter().zip(h.data.iter_mut()).zip(v.data.iter_mut()) {
                *oh += e[0] * p;
                *ov += e[1] * p;
            }
        }
        Self { h, v }
    }

    /// `⟨φ|χ(x, y)⟩`.
    pub fn postselect(&self, phi: &PolarizationState) -> PointerField {
        let [bh, bv] = phi.to_hv();
        let mut out = PointerField::zeros(&self.h.grid());
        for ((o, a), b) in out.data.iter_mut().zip(&self.h.data).zip(&self.v.data) {
            *o = bh.conj() * a + bv.conj() * b;
        }
        out
    }
}

impl PointerField {
    fn grid(&self) -> GridSpec {
        GridSpec {
            nx: self.nx,
            ny: self.ny,
            extent_x: self.dx * self.nx as f64,
            extent_y: self.dy * self.ny as f64,
        }
    }
}
