//! Polarization as a two-level quantum system.
//!
//! Kets are stored in the diagonal/anti-diagonal basis (`c_D`, `c_A`), which
//! is the basis the measured observable is diagonal in. Matrices act in the
//! horizontal/vertical basis, with `|D⟩ = (|H⟩ + |V⟩)/√2` and
//! `|A⟩ = (|H⟩ − |V⟩)/√2`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::{Error, Result};

/// Overlaps `|⟨φ|ψ⟩|` at or below this are treated as a weak-value pole.
pub const EPS_POST: f64 = 1e-9;

/// Tolerance for normalization, unitarity and hermiticity checks.
pub const EPS_EXACT: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
#[cfg(test)]
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A ket in the H/V basis.
pub type Ket = [Complex64; 2];

fn braket(bra: &Ket, ket: &Ket) -> Complex64 {
    bra[0].conj() * ket[0] + bra[1].conj() * ket[1]
}

/// A pure polarization state `c_D|D⟩ + c_A|A⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    c_d: Complex64,
    c_a: Complex64,
}

impl PolarizationState {
    /// Builds a state from its D/A amplitudes, which must already be normalized.
    pub fn new(c_d: Complex64, c_a: Complex64) -> Result<Self> {
        let norm_sqr = c_d.norm_sqr() + c_a.norm_sqr();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > EPS_EXACT {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { c_d, c_a })
    }

    /// Normalizes the given amplitudes. Fails only for the zero vector.
    pub fn normalized(c_d: Complex64, c_a: Complex64) -> Result<Self> {
        let norm_sqr = c_d.norm_sqr() + c_a.norm_sqr();
        if !(norm_sqr.is_finite() && norm_sqr > 0.0) {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let s = norm_sqr.sqrt().recip();
        Ok(Self {
            c_d: c_d * s,
            c_a: c_a * s,
        })
    }

    pub fn from_hv(ket: Ket) -> Result<Self> {
        let c_d = (ket[0] + ket[1]) * FRAC_1_SQRT_2;
        let c_a = (ket[0] - ket[1]) * FRAC_1_SQRT_2;
        Self::new(c_d, c_a)
    }

    pub fn horizontal() -> Self {
        Self {
            c_d: ONE * FRAC_1_SQRT_2,
            c_a: ONE * FRAC_1_SQRT_2,
        }
    }

    pub fn vertical() -> Self {
        Self {
            c_d: ONE * FRAC_1_SQRT_2,
            c_a: -ONE * FRAC_1_SQRT_2,
        }
    }

    pub fn diagonal() -> Self {
        Self { c_d: ONE, c_a: ZERO }
    }

    pub fn anti_diagonal() -> Self {
        Self { c_d: ZERO, c_a: ONE }
    }

    pub fn c_d(&self) -> Complex64 {
        self.c_d
    }

    pub fn c_a(&self) -> Complex64 {
        self.c_a
    }

    pub fn to_hv(&self) -> Ket {
        [
            (self.c_d + self.c_a) * FRAC_1_SQRT_2,
            (self.c_d - self.c_a) * FRAC_1_SQRT_2,
        ]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.c_d.conj() * other.c_d + self.c_a.conj() * other.c_a
    }

    /// `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_d.norm_sqr() + self.c_a.norm_sqr()
    }

    /// Multiplies by `exp(iφ)`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let u = Complex64::from_polar(1.0, phase);
        Self {
            c_d: self.c_d * u,
            c_a: self.c_a * u,
        }
    }
}

impl fmt::Display for PolarizationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6})|D⟩ + ({:.6})|A⟩", self.c_d, self.c_a)
    }
}

/// A 2×2 complex matrix in the H/V basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[Complex64; 2]; 2]);

impl Matrix2 {
    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Self([[a, ZERO], [ZERO, b]])
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &Ket, bra: &Ket) -> Self {
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = ket[r] * bra[c].conj();
            }
        }
        Self(m)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        let m = &self.0;
        [
            m[0][0] * ket[0] + m[0][1] * ket[1],
            m[1][0] * ket[0] + m[1][1] * ket[1],
        ]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Matrix2(m)
    }
}

/// A Jones matrix of an optical element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesOperator(Matrix2);

impl JonesOperator {
    pub fn from_matrix(m: Matrix2) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }

    /// Rotation by `-angle`. Element angles increase in the sense for which a
    /// half-waveplate at 22.5° turns `|H⟩` into `|A⟩`.
    fn axes(angle: f64) -> Matrix2 {
        let (s, c) = angle.sin_cos();
        Matrix2([
            [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
            [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    /// Linear retarder with fast axis at `angle` and the given retardance.
    pub fn retarder(angle: f64, retardance: f64) -> Self {
        let r = Self::axes(angle);
        let core = Matrix2::diag(ONE, Complex64::from_polar(1.0, retardance));
        Self(r * core * r.adjoint())
    }

    pub fn half_waveplate(angle: f64) -> Self {
        Self::retarder(angle, std::f64::consts::PI)
    }

    pub fn quarter_waveplate(angle: f64) -> Self {
        Self::retarder(angle, FRAC_PI_2)
    }

    /// `self` applied after `first`.
    pub fn then_after(&self, first: &JonesOperator) -> Self {
        Self(self.0 * first.0)
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        self.0.apply(ket)
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0).max_abs_diff(&Matrix2::identity())
    }
}

/// A Hermitian observable on polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableOp {
    matrix: Matrix2,
}

impl ObservableOp {
    pub fn new(matrix: Matrix2) -> Result<Self> {
        let deviation = matrix.max_abs_diff(&matrix.adjoint());
        if !(deviation <= EPS_EXACT) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix })
    }

    /// `|s⟩⟨s|`.
    pub fn projector(state: &PolarizationState) -> Self {
        let ket = state.to_hv();
        Self {
            matrix: Matrix2::outer(&ket, &ket),
        }
    }

    /// `π_D ≡ |D⟩⟨D|`.
    pub fn pi_d() -> Self {
        Self::projector(&PolarizationState::diagonal())
    }

    /// `π_A ≡ |A⟩⟨A|`.
    pub fn pi_a() -> Self {
        Self::projector(&PolarizationState::anti_diagonal())
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix2::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.matrix
    }

    pub fn is_projector(&self) -> bool {
        (self.matrix * self.matrix).max_abs_diff(&self.matrix) <= EPS_EXACT
    }

    /// `⟨bra|Â|ket⟩`.
    pub fn sandwich(&self, bra: &PolarizationState, ket: &PolarizationState) -> Complex64 {
        braket(&bra.to_hv(), &self.matrix.apply(&ket.to_hv()))
    }

    /// Eigenvalues (ascending) with orthonormal eigenvectors in the H/V basis.
    pub fn eigen(&self) -> [(f64, Ket); 2] {
        let m = &self.matrix.0;
        let a = m[0][0].re;
        let c = m[1][1].re;
        let b = m[0][1];
        let mean = 0.5 * (a + c);
        let half_gap = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
        let lo = mean - half_gap;
        let hi = mean + half_gap;
        if b.norm() <= EPS_EXACT * (1.0 + a.abs() + c.abs()) {
            let e0 = [ONE, ZERO];
            let e1 = [ZERO, ONE];
            return if a <= c {
                [(a, e0), (c, e1)]
            } else {
                [(c, e1), (a, e0)]
            };
        }
        let vector = |lambda: f64| -> Ket {
            // Rows of (M − λ) give two candidate null vectors; keep the better conditioned.
            let v1 = [b, Complex64::new(lambda - a, 0.0)];
            let v2 = [Complex64::new(lambda - c, 0.0), b.conj()];
            let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
            let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
            let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
            let s = n.sqrt().recip();
            [v[0] * s, v[1] * s]
        };
        [(lo, vector(lo)), (hi, vector(hi))]
    }
}

/// Closed-form input state for a half-waveplate at `theta` followed by a
/// quarter-waveplate at −45°, acting on `|H⟩`:
/// `sin(2θ − π/4)|D⟩ − i·cos(2θ − π/4)|A⟩`.
pub fn prepare_state(theta: f64) -> PolarizationState {
    let (s, c) = (2.0 * theta - FRAC_PI_4).sin_cos();
    PolarizationState {
        c_d: Complex64::new(s, 0.0),
        c_a: Complex64::new(0.0, -c),
    }
}

/// The same preparation carried out with Jones matrices.
///
/// Returns the prepared state and the global phase `γ` for which it equals
/// `exp(iγ)·prepare_state(theta)`.
pub fn prepare_state_via_jones(theta: f64) -> (PolarizationState, f64) {
    let hwp = JonesOperator::half_waveplate(theta);
    let qwp = JonesOperator::quarter_waveplate(-FRAC_PI_4);
    let out = qwp.then_after(&hwp).apply(&[ONE, ZERO]);
    let c_d = (out[0] + out[1]) * FRAC_1_SQRT_2;
    let c_a = (out[0] - out[1]) * FRAC_1_SQRT_2;
    let state = PolarizationState { c_d, c_a };
    let phase = prepare_state(theta).inner(&state).arg();
    (state, phase)
}

/// `⟨φ|Â|ψ⟩ / ⟨φ|ψ⟩`.
pub fn weak_value(
    observable: &ObservableOp,
    psi: &PolarizationState,
    phi: &PolarizationState,
) -> Result<Complex64> {
    let overlap = phi.inner(psi);
    if overlap.norm() <= EPS_POST {
        return Err(Error::PostSelectionSingular {
            overlap: overlap.norm(),
        });
    }
    Ok(observable.sandwich(phi, psi) / overlap)
}

/// Weak value of `π_D` for the waveplate family post-selected on `|H⟩`:
/// `½(1 + cos(4θ + π/2)) − (i/2)·sin(4θ + π/2)`.
pub fn predicted_weak_value(theta: f64) -> Complex64 {
    let (s, c) = (4.0 * theta + FRAC_PI_2).sin_cos();
    Complex64::new(0.5 * (1.0 + c), -0.5 * s)
}

/// A state read directly off a measured weak value of `π_D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedState {
    pub state: PolarizationState,
    /// `|⟨π_D⟩_W|² + |1 − ⟨π_D⟩_W|²`.
    pub normalizer: f64,
    /// Phase of `c_D` before the global phase was removed.
    pub applied_phase: f64,
}

/// Weak values with modulus at or below this count as zero when fixing the
/// global phase.
const EPS_ZERO_WEAK: f64 = 1e-12;

/// Rebuilds `|ψ⟩ ∝ w|D⟩ + (1 − w)|A⟩` from `w = ⟨π_D⟩_W` and fixes the
/// global phase so that `c_D` is real and non-negative.
///
/// When `w` vanishes `c_D` is zero and carries no phase; `c_A` is made real
/// and non-negative instead.
pub fn reconstruct_state(w_d: Complex64) -> Result<ReconstructedState> {
    if !(w_d.re.is_finite() && w_d.im.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "weak value {w_d} is not finite"
        )));
    }
    let c_a = ONE - w_d;
    let normalizer = w_d.norm_sqr() + c_a.norm_sqr();
    // N ≥ 1/2 for every finite w; this guards only against overflow.
    if !(normalizer.is_finite() && normalizer > f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(format!(
            "normalizer {normalizer} is degenerate"
        )));
    }
    let scale = normalizer.sqrt().recip();
    let raw = PolarizationState {
        c_d: w_d * scale,
        c_a: c_a * scale,
    };
    // The component made real is set exactly, not left with rounding residue.
    let (applied_phase, state) = if w_d.norm() > EPS_ZERO_WEAK {
        let phi = w_d.arg();
        let mut s = raw.with_global_phase(-phi);
        s.c_d = Complex64::new(raw.c_d.norm(), 0.0);
        (phi, s)
    } else {
        let phi = raw.c_a.arg();
        let mut s = raw.with_global_phase(-phi);
        s.c_a = Complex64::new(raw.c_a.norm(), 0.0);
        (phi, s)
    };
    Ok(ReconstructedState {
        state,
        normalizer,
        applied_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deg;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn half_waveplate_at_22_5_turns_h_into_a() {
        let out = JonesOperator::half_waveplate(deg(22.5)).apply(&[ONE, ZERO]);
        let s = PolarizationState::from_hv(out).unwrap();
        assert!((s.fidelity(&PolarizationState::anti_diagonal()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prepare_state_closed_form_points() {
        let s = prepare_state(deg(22.5));
        assert!(close(s.c_d(), ZERO, TOL));
        assert!(close(s.c_a(), -I, TOL));

        let s = prepare_state(0.0);
        assert!(close(s.c_d(), -ONE * FRAC_1_SQRT_2, TOL));
        assert!(close(s.c_a(), -I * FRAC_1_SQRT_2, TOL));

        let s = prepare_state(deg(45.0));
        assert!(close(s.c_d(), ONE * FRAC_1_SQRT_2, TOL));
        assert!(close(s.c_a(), -I * FRAC_1_SQRT_2, TOL));
    }

    #[test]
    fn jones_preparation_matches_closed_form_up_to_phase() {
        for theta_deg in [0.0, 22.5, 45.0, 7.0, 61.0, 90.0] {
            let theta = deg(theta_deg);
            let (state, phase) = prepare_state_via_jones(theta);
            let expected = prepare_state(theta).with_global_phase(phase);
            assert!(close(state.c_d(), expected.c_d(), TOL), "θ = {theta_deg}");
            assert!(close(state.c_a(), expected.c_a(), TOL), "θ = {theta_deg}");
        }
    }

    #[test]
    fn waveplates_are_unitary() {
        for a in [-1.3, 0.0, 0.4, 2.9] {
            assert!(JonesOperator::half_waveplate(a).unitarity_defect() < TOL);
            assert!(JonesOperator::quarter_waveplate(a).unitarity_defect() < TOL);
        }
    }

    #[test]
    fn weak_value_examples() {
        let h = PolarizationState::horizontal();
        let d = PolarizationState::diagonal();
        let pi_d = ObservableOp::pi_d();
        assert!(close(weak_value(&pi_d, &d, &h).unwrap(), ONE, TOL));
        assert!(close(weak_value(&pi_d, &h, &h).unwrap(), ONE * 0.5, TOL));
        let w = weak_value(&pi_d, &prepare_state(0.0), &h).unwrap();
        assert!(close(w, Complex64::new(0.5, -0.5), TOL));
    }

    #[test]
    fn orthogonal_post_selection_is_singular() {
        let err = weak_value(
            &ObservableOp::pi_d(),
            &PolarizationState::horizontal(),
            &PolarizationState::vertical(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::PostSelectionSingular { .. }));
    }

    #[test]
    fn predicted_weak_value_points() {
        assert!(close(predicted_weak_value(0.0), Complex64::new(0.5, -0.5), TOL));
        assert!(close(predicted_weak_value(deg(22.5)), ZERO, TOL));
        assert!(close(predicted_weak_value(deg(45.0)), Complex64::new(0.5, 0.5), TOL));
    }

    #[test]
    fn reconstruct_examples() {
        let r = reconstruct_state(ONE).unwrap();
        assert!(close(r.state.c_d(), ONE, TOL) && close(r.state.c_a(), ZERO, TOL));
        assert!((r.normalizer - 1.0).abs() < TOL);

        let r = reconstruct_state(ONE * 0.5).unwrap();
        assert!((r.normalizer - 0.5).abs() < TOL);
        assert!(r.state.fidelity(&PolarizationState::horizontal()) > 1.0 - TOL);
        assert!(close(r.state.c_d(), ONE * FRAC_1_SQRT_2, TOL));

        let r = reconstruct_state(Complex64::new(0.5, 0.5)).unwrap();
        let expected = prepare_state(deg(45.0));
        assert!(close(r.state.c_d(), expected.c_d(), TOL));
        assert!(close(r.state.c_a(), expected.c_a(), TOL));
        assert!((r.applied_phase - FRAC_PI_4).abs() < TOL);
    }

    #[test]
    fn reconstruct_zero_weak_value_fixes_c_a() {
        let r = reconstruct_state(ZERO).unwrap();
        assert!(close(r.state.c_d(), ZERO, TOL));
        assert!(close(r.state.c_a(), ONE, TOL));
        assert!(reconstruct_state(Complex64::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn eigen_of_projectors_and_identity() {
        for obs in [ObservableOp::pi_d(), ObservableOp::pi_a()] {
            assert!(obs.is_projector());
            let [(l0, v0), (l1, v1)] = obs.eigen();
            assert!(l0.abs() < TOL && (l1 - 1.0).abs() < TOL);
            for (l, v) in [(l0, v0), (l1, v1)] {
                let mv = obs.matrix().apply(&v);
                assert!(close(mv[0], v[0] * l, TOL) && close(mv[1], v[1] * l, TOL));
            }
            assert!(braket(&v0, &v1).norm() < TOL);
        }
        let [(a, _), (b, _)] = ObservableOp::identity().eigen();
        assert!((a - 1.0).abs() < TOL && (b - 1.0).abs() < TOL);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = Matrix2([[ONE, I], [I, ONE]]);
        assert!(matches!(ObservableOp::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn round_trip_on_one_degree_grid() {
        let h = PolarizationState::horizontal();
        for theta_deg in 0..=90 {
            let psi = prepare_state(deg(theta_deg as f64));
            let w = weak_value(&ObservableOp::pi_d(), &psi, &h).unwrap();
            let rec = reconstruct_state(w).unwrap();
            assert!(rec.state.fidelity(&psi) >= 1.0 - 1e-10, "θ = {theta_deg}");
            assert!((rec.normalizer - (w.norm_sqr() + (ONE - w).norm_sqr())).abs() < TOL);
            assert!(rec.state.c_d().im.abs() < TOL && rec.state.c_d().re >= 0.0);
        }
    }

    proptest! {
        #[test]
        fn closed_form_and_weak_value_agree(theta in -10.0f64..10.0) {
            let h = PolarizationState::horizontal();
            let psi = prepare_state(theta);
            prop_assert!((psi.norm_sqr() - 1.0).abs() < TOL);
            // |c_D + c_A|² = 1, so the overlap with |H⟩ is 1/√2.
            prop_assert!(((psi.c_d() + psi.c_a()).norm_sqr() - 1.0).abs() < TOL);
            let w = weak_value(&ObservableOp::pi_d(), &psi, &h).unwrap();
            prop_assert!(close(w, predicted_weak_value(theta), TOL));
            let wa = weak_value(&ObservableOp::pi_a(), &psi, &h).unwrap();
            prop_assert!(close(wa, ONE - w, TOL));
        }

        #[test]
        fn jones_output_is_normalized(theta in -10.0f64..10.0) {
            let (state, _) = prepare_state_via_jones(theta);
            prop_assert!((state.norm_sqr() - 1.0).abs() < TOL);
            prop_assert!(state.fidelity(&prepare_state(theta)) > 1.0 - TOL);
        }

        #[test]
        fn reconstruction_phase_convention(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let w = Complex64::new(re, im);
            let r = reconstruct_state(w).unwrap();
            prop_assert!((r.state.norm_sqr() - 1.0).abs() < TOL);
            prop_assert!((r.normalizer - (w.norm_sqr() + (ONE - w).norm_sqr())).abs() < TOL);
            prop_assert!(r.state.c_d().im.abs() < TOL);
            prop_assert!(r.state.c_d().re >= 0.0);
        }
    }
}
