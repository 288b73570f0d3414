//! Von Neumann measurement with one or two Gaussian pointer degrees of freedom.
//!
//! The pointer is the transverse mode `(x, y)` of a photon. Coupling the
//! observable `Â = Σ a_n |a_n⟩⟨a_n|` with strength `δ` shifts the pointer by
//! `δ·a_n` in the branch belonging to eigenvalue `a_n`. After post-selection
//! on `|φ⟩` the pointer is a finite superposition of displaced Gaussians,
//! which this module keeps in closed form.
//!
//! Width convention: the pointer width `w` is the 1/e² intensity half-width.
//! Intensity standard deviation is `Δ = w/2`, momentum standard deviation
//! `1/(2Δ)` (ħ = 1, so `k` is in 1/length).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::jones::{Ket, ObservableOp, PolarizationState, EPS_POST};
use crate::readout::WeakValueEstimate;
use crate::rng::{rng_for, Rng};
use crate::{Error, Result};

/// Initial Gaussian pointer state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPointerSpec {
    width: f64,
    center: (f64, f64),
}

impl GaussianPointerSpec {
    pub fn new(width: f64, center: (f64, f64)) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidPointer(format!(
                "width must be positive, got {width}"
            )));
        }
        if !(center.0.is_finite() && center.1.is_finite()) {
            return Err(Error::InvalidPointer("center must be finite".into()));
        }
        Ok(Self { width, center })
    }

    pub fn centered(width: f64) -> Result<Self> {
        Self::new(width, (0.0, 0.0))
    }

    /// 1/e² intensity half-width `w`.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// Intensity standard deviation `Δ = w/2`.
    pub fn sigma(&self) -> f64 {
        0.5 * self.width
    }

    /// Momentum intensity standard deviation `1/(2Δ)`.
    pub fn momentum_sigma(&self) -> f64 {
        0.5 / self.sigma()
    }

    /// Normalized one-dimensional amplitude profile centered on zero.
    pub fn profile(&self, u: f64) -> f64 {
        let s = self.sigma();
        (2.0 * PI * s * s).powf(-0.25) * (-u * u / (4.0 * s * s)).exp()
    }
}

/// Pointer degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// How the observable is coupled to the pointer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingMode {
    /// `exp(−iδ Â k_x)`: one pointer, readout of `x` or `k_x`.
    SinglePointer(f64),
    /// `exp(−iÂ(δ₁k_x + δ₂k_y))`.
    TwoPointer(f64, f64),
    /// Displacement `δ` along the diagonal `(x + y)/√2`, i.e. a per-axis
    /// shift of `δ/√2`.
    Diagonal(f64),
}

impl CouplingMode {
    /// Pointer shift per unit eigenvalue along `(x, y)`.
    pub fn shift_per_eigenvalue(&self) -> (f64, f64) {
        match *self {
            CouplingMode::SinglePointer(d) => (d, 0.0),
            CouplingMode::TwoPointer(d1, d2) => (d1, d2),
            CouplingMode::Diagonal(d) => (d * FRAC_1_SQRT_2, d * FRAC_1_SQRT_2),
        }
    }

    /// Which axis carries the momentum (imaginary-part) readout.
    pub fn momentum_axis(&self) -> Axis {
        match self {
            CouplingMode::SinglePointer(_) => Axis::X,
            _ => Axis::Y,
        }
    }

    fn strengths(&self) -> Vec<f64> {
        match *self {
            CouplingMode::SinglePointer(d) | CouplingMode::Diagonal(d) => vec![d],
            CouplingMode::TwoPointer(d1, d2) => vec![d1, d2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSpec {
    pub observable: ObservableOp,
    pub mode: CouplingMode,
}

impl CouplingSpec {
    pub fn new(observable: ObservableOp, mode: CouplingMode) -> Result<Self> {
        for d in mode.strengths() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "coupling strength must be finite and non-negative, got {d}"
                )));
            }
        }
        Ok(Self { observable, mode })
    }

    /// `π_D` displaced along the diagonal by `δ`, as done by the walk-off crystal.
    pub fn walk_off(delta: f64) -> Result<Self> {
        Self::new(ObservableOp::pi_d(), CouplingMode::Diagonal(delta))
    }
}

/// One displaced Gaussian in a post-selected superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub amplitude: Complex64,
    /// Shift of this branch relative to the pointer center.
    pub shift: (f64, f64),
}

/// `ψ(x, y) = Σ_n α_n·g(x − x̄ − s_{n,x})·g(y − ȳ − s_{n,y})` with `g` the
/// normalized initial profile. Not renormalized: `∫|ψ|²` is the
/// post-selection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectedPointer {
    branches: Vec<Branch>,
    spec: GaussianPointerSpec,
}

impl PostSelectedPointer {
    /// Merges coincident shifts, drops vanishing amplitudes and sorts by shift.
    pub fn from_branches(branches: Vec<Branch>, spec: GaussianPointerSpec) -> Self {
        let tol = 1e-12 * spec.width();
        let mut merged: Vec<Branch> = Vec::with_capacity(branches.len());
        for b in branches {
            match merged.iter_mut().find(|m| {
                (m.shift.0 - b.shift.0).abs() <= tol && (m.shift.1 - b.shift.1).abs() <= tol
            }) {
                Some(m) => m.amplitude += b.amplitude,
                None => merged.push(b),
            }
        }
        let largest = merged
            .iter()
            .map(|b| b.amplitude.norm())
            .fold(0.0, f64::max);
        merged.retain(|b| b.amplitude.norm() > 1e-13 * largest);
        merged.sort_by(|a, b| {
            a.shift
                .0
                .total_cmp(&b.shift.0)
                .then(a.shift.1.total_cmp(&b.shift.1))
        });
        Self {
            branches: merged,
            spec,
        }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn spec(&self) -> &GaussianPointerSpec {
        &self.spec
    }

    /// Absolute position of a branch center.
    pub fn branch_center(&self, b: &Branch) -> (f64, f64) {
        (self.spec.center.0 + b.shift.0, self.spec.center.1 + b.shift.1)
    }

    /// Field value at `(x, y)`.
    pub fn amplitude_at(&self, x: f64, y: f64) -> Complex64 {
        self.branches
            .iter()
            .map(|b| {
                let (cx, cy) = self.branch_center(b);
                b.amplitude * (self.spec.profile(x - cx) * self.spec.profile(y - cy))
            })
            .sum()
    }

    /// `∫|ψ|² dx dy`, from closed-form Gaussian overlaps.
    pub fn probability(&self) -> f64 {
        let s = self.spec.sigma();
        let mut p = 0.0;
        for m in &self.branches {
            for n in &self.branches {
                let rho = overlap(m.shift.0 - n.shift.0, s) * overlap(m.shift.1 - n.shift.1, s);
                p += (m.amplitude.conj() * n.amplitude).re * rho;
            }
        }
        p
    }

    /// Largest amplitude or shift difference against another pointer with
    /// the same branch structure; `None` if the structures differ.
    pub fn max_difference(&self, other: &Self) -> Option<f64> {
        if self.branches.len() != other.branches.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (a, b) in self.branches.iter().zip(&other.branches) {
            worst = worst
                .max((a.amplitude - b.amplitude).norm())
                .max((a.shift.0 - b.shift.0).abs())
                .max((a.shift.1 - b.shift.1).abs());
        }
        Some(worst)
    }
}

/// `⟨g(· − a)|g(· − b)⟩` for the normalized profile, a function of `a − b` only.
fn overlap(diff: f64, sigma: f64) -> f64 {
    (-diff * diff / (8.0 * sigma * sigma)).exp()
}

/// Entangled system–pointer state before post-selection: a list of
/// (unnormalized system ket, pointer shift) terms.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    terms: Vec<(Ket, (f64, f64))>,
    spec: GaussianPointerSpec,
}

impl JointState {
    pub fn new(psi: &PolarizationState, spec: GaussianPointerSpec) -> Self {
        Self {
            terms: vec![(psi.to_hv(), (0.0, 0.0))],
            spec,
        }
    }

    /// Applies `exp(−iδ Â k_axis)`.
    pub fn couple(&self, axis: Axis, strength: f64, observable: &ObservableOp) -> Self {
        let eigen = observable.eigen();
        let mut terms = Vec::with_capacity(self.terms.len() * 2);
        for (ket, shift) in &self.terms {
            for (value, vector) in &eigen {
                let c = vector[0].conj() * ket[0] + vector[1].conj() * ket[1];
                let projected = [vector[0] * c, vector[1] * c];
                let mut s = *shift;
                match axis {
                    Axis::X => s.0 += strength * value,
                    Axis::Y => s.1 += strength * value,
                }
                terms.push((projected, s));
            }
        }
        Self {
            terms,
            spec: self.spec,
        }
    }

    /// Projects the system onto `|φ⟩`.
    pub fn postselect(&self, phi: &PolarizationState) -> Result<PostSelectedPointer> {
        let bra = phi.to_hv();
        let branches = self
            .terms
            .iter()
            .map(|(ket, shift)| Branch {
                amplitude: bra[0].conj() * ket[0] + bra[1].conj() * ket[1],
                shift: *shift,
            })
            .collect();
        checked(PostSelectedPointer::from_branches(branches, self.spec))
    }
}

fn checked(p: PostSelectedPointer) -> Result<PostSelectedPointer> {
    let prob = p.probability();
    if !(prob > EPS_POST * EPS_POST) {
        return Err(Error::PostSelectionSingular {
            overlap: prob.max(0.0).sqrt(),
        });
    }
    Ok(p)
}

/// Couples `psi` to the pointer and post-selects on `phi`, exactly.
pub fn couple_and_postselect(
    psi: &PolarizationState,
    coupling: &CouplingSpec,
    pointer: &GaussianPointerSpec,
    phi: &PolarizationState,
) -> Result<PostSelectedPointer> {
    let (ux, uy) = coupling.mode.shift_per_eigenvalue();
    let bra = phi.to_hv();
    let ket = psi.to_hv();
    let branches = coupling
        .observable
        .eigen()
        .iter()
        .map(|(value, v)| {
            let along = v[0].conj() * ket[0] + v[1].conj() * ket[1];
            let back = bra[0].conj() * v[0] + bra[1].conj() * v[1];
            Branch {
                amplitude: back * along,
                shift: (ux * value, uy * value),
            }
        })
        .collect();
    checked(PostSelectedPointer::from_branches(branches, *pointer))
}

/// Closed-form moments of the normalized post-selected pointer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_kx: f64,
    pub mean_ky: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub var_kx: f64,
    pub var_ky: f64,
    pub probability: f64,
}

/// Matrix elements `⟨g_a|O|g_b⟩` of one axis for `O ∈ {1, q, q², k, k²}`.
struct AxisElements {
    one: f64,
    q: f64,
    q2: f64,
    k: Complex64,
    k2: f64,
}

fn axis_elements(a: f64, b: f64, sigma: f64) -> AxisElements {
    let s2 = sigma * sigma;
    let rho = overlap(a - b, sigma);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (a - b);
    AxisElements {
        one: rho,
        q: mid * rho,
        q2: (mid * mid + s2) * rho,
        k: Complex64::new(0.0, (a - b) / (4.0 * s2) * rho),
        k2: (s2 - half * half) / (4.0 * s2 * s2) * rho,
    }
}

/// Moments from analytic Gaussian overlap integrals; exact at any `δ/w`.
pub fn exact_moments(p: &PostSelectedPointer) -> ExactMoments {
    let s = p.spec.sigma();
    let mut acc = [Complex64::new(0.0, 0.0); 9];
    for m in &p.branches {
        for n in &p.branches {
            let w = m.amplitude.conj() * n.amplitude;
            let (ax, ay) = p.branch_center(m);
            let (bx, by) = p.branch_center(n);
            let ex = axis_elements(ax, bx, s);
            let ey = axis_elements(ay, by, s);
            acc[0] += w * (ex.one * ey.one);
            acc[1] += w * (ex.q * ey.one);
            acc[2] += w * (ex.one * ey.q);
            acc[3] += w * ex.k * ey.one;
            acc[4] += w * ex.one * ey.k;
            acc[5] += w * (ex.q2 * ey.one);
            acc[6] += w * (ex.one * ey.q2);
            acc[7] += w * (ex.k2 * ey.one);
            acc[8] += w * (ex.one * ey.k2);
        }
    }
    let norm = acc[0].re;
    let e = |i: usize| acc[i].re / norm;
    let (mx, my, mkx, mky) = (e(1), e(2), e(3), e(4));
    ExactMoments {
        mean_x: mx,
        mean_y: my,
        mean_kx: mkx,
        mean_ky: mky,
        var_x: e(5) - mx * mx,
        var_y: e(6) - my * my,
        var_kx: e(7) - mkx * mkx,
        var_ky: e(8) - mky * mky,
        probability: norm,
    }
}

/// Per-axis shifts `(d_re, d_im)` that scale the position and momentum
/// readouts.
fn readout_shifts(coupling: &CouplingSpec) -> Result<(f64, f64)> {
    let (ux, uy) = coupling.mode.shift_per_eigenvalue();
    let d_im = match coupling.mode.momentum_axis() {
        Axis::X => ux,
        Axis::Y => uy,
    };
    if !(ux > 0.0 && d_im > 0.0) {
        return Err(Error::InvalidArgument(
            "coupling strengths must be positive for a weak-value readout".into(),
        ));
    }
    Ok((ux, d_im))
}

/// First-order weak-value estimator
/// `(⟨x⟩ − x̄)/d + i·(2Δ²/d)·⟨k⟩`, with `k` the momentum of the readout axis.
pub fn weak_value_from_moments(
    moments: &ExactMoments,
    coupling: &CouplingSpec,
    pointer: &GaussianPointerSpec,
) -> Result<Complex64> {
    let (d_re, d_im) = readout_shifts(coupling)?;
    let s = pointer.sigma();
    let k = match coupling.mode.momentum_axis() {
        Axis::X => moments.mean_kx,
        Axis::Y => moments.mean_ky,
    };
    Ok(Complex64::new(
        (moments.mean_x - pointer.center().0) / d_re,
        2.0 * s * s * k / d_im,
    ))
}

/// Readout schemes for the two weak-value components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Ensemble split in two before the coupling.
    A,
    /// Ensemble split in two after the coupling and post-selection.
    B,
    /// Every post-selected member contributes to both components.
    C,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::A, Method::B, Method::C];

    pub fn letter(&self) -> char {
        match self {
            Method::A => 'A',
            Method::B => 'B',
            Method::C => 'C',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Exact moments; every ensemble member behaves as the mean.
    Noiseless,
    /// Finite ensemble: binomial post-selection and sampled pointer readouts.
    Photons { seed: u64 },
}

/// Representation of one pointer axis in which a sample is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rep {
    Position,
    Momentum,
}

/// Exact sampler for `|ψ|²` in a mixed position/momentum representation.
///
/// Proposal is the incoherent mixture `Σ|α_n|²|f_n|²`; since
/// `|Σ α_n f_n|² ≤ N·Σ|α_n f_n|²`, rejection with that bound is exact.
struct PointerSampler<'a> {
    pointer: &'a PostSelectedPointer,
    reps: (Rep, Rep),
    weights: Vec<f64>,
    total: f64,
}

impl<'a> PointerSampler<'a> {
    fn new(pointer: &'a PostSelectedPointer, reps: (Rep, Rep)) -> Self {
        let weights: Vec<f64> = pointer.branches.iter().map(|b| b.amplitude.norm_sqr()).collect();
        let total = weights.iter().sum();
        Self {
            pointer,
            reps,
            weights,
            total,
        }
    }

    /// Unnormalized amplitude factor of a branch centered at `c` along one axis.
    fn factor(rep: Rep, u: f64, c: f64, sigma: f64) -> Complex64 {
        match rep {
            Rep::Position => Complex64::new((-(u - c) * (u - c) / (4.0 * sigma * sigma)).exp(), 0.0),
            Rep::Momentum => Complex64::from_polar((-u * u * sigma * sigma).exp(), -u * c),
        }
    }

    fn draw_axis(rep: Rep, c: f64, sigma: f64, rng: &mut Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        match rep {
            Rep::Position => c + sigma * z,
            Rep::Momentum => z * 0.5 / sigma,
        }
    }

    fn sample(&self, rng: &mut Rng) -> (f64, f64) {
        let sigma = self.pointer.spec.sigma();
        let n = self.pointer.branches.len() as f64;
        loop {
            let mut pick = rng.random::<f64>() * self.total;
            let mut chosen = self.weights.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                if pick < *w {
                    chosen = i;
                    break;
                }
                pick -= w;
            }
            let (cx, cy) = self.pointer.branch_center(&self.pointer.branches[chosen]);
            let u = Self::draw_axis(self.reps.0, cx, sigma, rng);
            let v = Self::draw_axis(self.reps.1, cy, sigma, rng);
            let mut coherent = Complex64::new(0.0, 0.0);
            let mut incoherent = 0.0;
            for b in &self.pointer.branches {
                let (bx, by) = self.pointer.branch_center(b);
                let f = b.amplitude
                    * Self::factor(self.reps.0, u, bx, sigma)
                    * Self::factor(self.reps.1, v, by, sigma);
                coherent += f;
                incoherent += f.norm_sqr();
            }
            if rng.random::<f64>() * n * incoherent <= coherent.norm_sqr() {
                return (u, v);
            }
        }
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Reads out the complex weak value with one of the three schemes.
///
/// All methods share the same coupling, so their sub-ensembles are
/// identically distributed; they differ only in which post-selected members
/// feed each component. With [`Sampling::Photons`] an ensemble of
/// `ensemble_size` input photons is post-selected binomially.
pub fn method_readout(
    method: Method,
    ensemble_size: u64,
    psi: &PolarizationState,
    coupling: &CouplingSpec,
    pointer: &GaussianPointerSpec,
    phi: &PolarizationState,
    sampling: Sampling,
) -> Result<WeakValueEstimate> {
    let min = if method == Method::C { 1 } else { 2 };
    if ensemble_size < min {
        return Err(Error::InsufficientEnsemble {
            method: method.letter(),
            size: ensemble_size,
        });
    }
    let two_pointers = coupling.mode.momentum_axis() == Axis::Y;
    if method == Method::C && !two_pointers {
        return Err(Error::NeedsTwoPointers);
    }
    let post = couple_and_postselect(psi, coupling, pointer, phi)?;
    let (d_re, d_im) = readout_shifts(coupling)?;

    let seed = match sampling {
        Sampling::Noiseless => {
            let m = exact_moments(&post);
            return Ok(WeakValueEstimate {
                value: weak_value_from_moments(&m, coupling, pointer)?,
                se_re: 0.0,
                se_im: 0.0,
                n_trials: ensemble_size as usize,
            });
        }
        Sampling::Photons { seed } => seed,
    };

    let mut rng = rng_for(seed, &[method.letter() as u64]);
    let p = post.probability().clamp(0.0, 1.0);
    let binomial = |n: u64, p: f64, rng: &mut Rng| -> u64 {
        Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
    };
    let (n_re, n_im) = match method {
        Method::A => {
            let half = ensemble_size / 2;
            (
                binomial(half, p, &mut rng),
                binomial(ensemble_size - half, p, &mut rng),
            )
        }
        Method::B => {
            let n = binomial(ensemble_size, p, &mut rng);
            let re = binomial(n, 0.5, &mut rng);
            (re, n - re)
        }
        Method::C => {
            let n = binomial(ensemble_size, p, &mut rng);
            (n, n)
        }
    };
    if n_re < 2 || n_im < 2 {
        return Err(Error::InsufficientEnsemble {
            method: method.letter(),
            size: ensemble_size,
        });
    }

    let momentum_reps = if two_pointers {
        (Rep::Position, Rep::Momentum)
    } else {
        (Rep::Momentum, Rep::Position)
    };
    let pick_momentum = |s: (f64, f64)| if two_pointers { s.1 } else { s.0 };
    let (xs, ks): (Vec<f64>, Vec<f64>) = if method == Method::C {
        let sampler = PointerSampler::new(&post, momentum_reps);
        (0..n_re).map(|_| sampler.sample(&mut rng)).unzip()
    } else {
        let position = PointerSampler::new(&post, (Rep::Position, Rep::Position));
        let momentum = PointerSampler::new(&post, momentum_reps);
        let xs = (0..n_re).map(|_| position.sample(&mut rng).0).collect();
        let ks = (0..n_im).map(|_| pick_momentum(momentum.sample(&mut rng))).collect();
        (xs, ks)
    };

    let s2 = 2.0 * pointer.sigma() * pointer.sigma();
    let (mx, se_x) = mean_and_se(&xs);
    let (mk, se_k) = mean_and_se(&ks);
    let n_used = if method == Method::C { n_re } else { n_re + n_im };
    Ok(WeakValueEstimate {
        value: Complex64::new((mx - pointer.center().0) / d_re, s2 * mk / d_im),
        se_re: se_x / d_re,
        se_im: s2 * se_k / d_im,
        n_trials: n_used as usize,
    })
}
