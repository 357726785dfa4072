//! Time-dependent Schrödinger equation for one and two spins (ħ = 1).
//!
//! Hamiltonians are angular-frequency matrices. The integrator is classical
//! fixed-step RK4 on the complex ODE `dψ/dt = −iH(t)ψ`; the state is never
//! renormalized, so norm drift stays available as a diagnostic.

use std::f64::consts::PI;

use crate::bloch::RabiParams;
use crate::error::{Error, Result};
use crate::linalg::{pauli, sigma_dot, tensor, Axis, CMat, CVec, Mat2, Mat4, Spinor, Vec3, C64};
use crate::phase::{PhaseDecomposition, PhaseTracker};

/// Upper bound on `dt · (λ_max − λ_min)` accepted by the integrator.
pub const MAX_STEP_PHASE: f64 = 0.01;

/// Single-spin Hamiltonian in the lab frame under the rotating-wave
/// approximation: `½[[ω₀, ω₁e^{−i(ωt+φ)}], [ω₁e^{i(ωt+φ)}, −ω₀]]`.
pub fn hamiltonian_1q(p: &RabiParams, t: f64) -> Mat2 {
    sigma_dot(crate::bloch::lab_rabi_vector(p, t)).scale(C64::new(0.5, 0.0))
}

/// Single-spin Hamiltonian in the frame rotating with the drive:
/// `½ Ω'·σ` with `Ω' = (ω₁cos φ, ω₁sin φ, ω₀ − ω)`.
pub fn rotating_hamiltonian_1q(detuning: f64, omega1: f64, phi: f64) -> Mat2 {
    sigma_dot(Vec3::new(omega1 * phi.cos(), omega1 * phi.sin(), detuning)).scale(C64::new(0.5, 0.0))
}

/// Two J-coupled spins sharing one rotating field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSpinParams {
    /// Transition frequency of spin `a` (rad/s).
    pub omega_a: f64,
    /// Transition frequency of spin `b` (rad/s).
    pub omega_b: f64,
    /// Scalar coupling J (Hz); the coupling term is `2πJ S_az S_bz`.
    pub j: f64,
    /// Drive amplitude ω₁ (rad/s).
    pub omega1: f64,
    /// Drive frequency ω (rad/s).
    pub omega: f64,
    /// Drive phase φ (rad).
    pub phi: f64,
    /// Whether the rotating field also acts on spin `b`.
    pub drive_on_b: bool,
}

impl TwoSpinParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.omega_a,
            self.omega_b,
            self.j,
            self.omega1,
            self.omega,
            self.phi,
        ];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "two-spin parameters must be finite".into(),
            ));
        }
        if self.omega_a <= self.omega_b {
            return Err(Error::InvalidParameter(format!(
                "expected omega_a > omega_b, got {} <= {}",
                self.omega_a, self.omega_b
            )));
        }
        if self.omega1 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "omega1 must be >= 0, got {}",
                self.omega1
            )));
        }
        Ok(())
    }

    /// `πJ` in rad/s.
    pub fn pi_j(&self) -> f64 {
        PI * self.j
    }

    /// Transition frequency of spin `a` with spin `b` up: `ω₊ = ω_a + πJ`.
    pub fn omega_plus(&self) -> f64 {
        self.omega_a + self.pi_j()
    }

    /// Transition frequency of spin `a` with spin `b` down: `ω₋ = ω_a − πJ`.
    pub fn omega_minus(&self) -> f64 {
        self.omega_a - self.pi_j()
    }

    /// Frequency of the frame used for spin `b`: the drive frequency when the
    /// drive touches `b`, otherwise `b`'s own Larmor frequency.
    pub fn frame_b(&self, omega: f64) -> f64 {
        if self.drive_on_b {
            omega
        } else {
            self.omega_b
        }
    }
}

/// Static lab-frame two-spin Hamiltonian
/// `ω_a S_az⊗1 + ω_b 1⊗S_bz + 2πJ S_az⊗S_bz`.
pub fn hamiltonian_2q(p: &TwoSpinParams) -> Mat4 {
    let pj = p.pi_j();
    let (a, b) = (p.omega_a, p.omega_b);
    Mat4::from_diag([
        C64::new(0.5 * (a + b + pj), 0.0),
        C64::new(0.5 * (a - b - pj), 0.0),
        C64::new(0.5 * (-a + b - pj), 0.0),
        C64::new(0.5 * (-a - b + pj), 0.0),
    ])
}

fn half_drive(omega1: f64, angle: f64) -> Mat2 {
    sigma_dot(Vec3::new(omega1 * angle.cos(), omega1 * angle.sin(), 0.0)).scale(C64::new(0.5, 0.0))
}

/// Lab-frame two-spin Hamiltonian including the rotating drive.
pub fn hamiltonian_2q_lab(p: &TwoSpinParams, t: f64) -> Mat4 {
    let d = half_drive(p.omega1, p.omega * t + p.phi);
    let mut h = hamiltonian_2q(p) + tensor(&d, &Mat2::identity());
    if p.drive_on_b {
        h += tensor(&Mat2::identity(), &d);
    }
    h
}

/// Two-spin Hamiltonian in the frame where spin `a` rotates at the drive
/// frequency `omega` and spin `b` at [`TwoSpinParams::frame_b`].
pub fn rotating_hamiltonian_2q(p: &TwoSpinParams, omega: f64, omega1: f64, phi: f64) -> Mat4 {
    let half = C64::new(0.5, 0.0);
    let sz = pauli(Axis::Z);
    let id = Mat2::identity();
    let d = half_drive(omega1, phi);
    let mut h = tensor(&sz, &id).scale(half * (p.omega_a - omega))
        + tensor(&id, &sz).scale(half * (p.omega_b - p.frame_b(omega)))
        + tensor(&sz, &sz).scale(half * p.pi_j())
        + tensor(&d, &id);
    if p.drive_on_b {
        h += tensor(&id, &d);
    }
    h
}

/// Bloch vector `s_i = ⟨ψ|σ_i|ψ⟩`.
pub fn bloch_of_state(psi: &Spinor) -> Vec3 {
    let c = psi.0[0].conj() * psi.0[1];
    Vec3::new(
        2.0 * c.re,
        2.0 * c.im,
        psi.0[0].norm_sqr() - psi.0[1].norm_sqr(),
    )
}

/// Result of one integration.
#[derive(Clone, Debug)]
pub struct Propagation<const N: usize> {
    pub psi: CVec<N>,
    pub t: f64,
    /// `arg⟨ψ(0)|ψ(t)⟩` unwrapped continuously; `None` if continuity was lost
    /// (overlap through zero or a per-step jump above π/2).
    pub accumulated_global_phase: Option<f64>,
    pub phases: PhaseDecomposition,
    /// `|‖ψ(T)‖ − ‖ψ(0)‖|`.
    pub norm_drift: f64,
    /// Smallest overlap of consecutive states.
    pub min_step_overlap: f64,
    /// Recorded `(t, ψ)` samples (empty unless requested).
    pub samples: Vec<(f64, CVec<N>)>,
    pub steps: usize,
}

/// Step control for [`propagate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    /// Maximum step; the span is divided into equal steps no larger than this.
    pub dt: f64,
    /// Record every `n`-th step (plus the first and last points); 0 disables.
    pub record_every: usize,
}

impl StepConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            record_every: 0,
        }
    }

    pub fn recording(dt: f64, every: usize) -> Self {
        Self {
            dt,
            record_every: every,
        }
    }
}

#[inline]
fn minus_i_h_psi<const N: usize>(h: &CMat<N>, psi: &CVec<N>) -> CVec<N> {
    let mut out = h.apply(psi);
    for z in out.0.iter_mut() {
        *z = C64::new(z.im, -z.re);
    }
    out
}

/// Integrate `dψ/dt = −iH(t)ψ` over `t_span` with RK4.
///
/// Fails with [`Error::StepTooLarge`] whenever `dt` times the spectral spread
/// of `H(t)` (Gershgorin bound for N > 2) exceeds [`MAX_STEP_PHASE`].
pub fn propagate<const N: usize, F>(
    psi0: CVec<N>,
    h_of_t: F,
    t_span: (f64, f64),
    cfg: &StepConfig,
) -> Result<Propagation<N>>
where
    F: Fn(f64) -> CMat<N>,
{
    let dt = cfg.dt;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep { dt });
    }
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Error::InvalidSpan { start: t0, end: t1 });
    }
    let n = ((t1 - t0) / dt).ceil() as usize;
    let h_step = if n == 0 { 0.0 } else { (t1 - t0) / n as f64 };

    let mut psi = psi0;
    let mut h_now = h_of_t(t0);
    let mut tracker = PhaseTracker::new(t0, psi0, h_now.expectation(&psi0));
    let mut samples = Vec::new();
    if cfg.record_every > 0 {
        samples.push((t0, psi0));
    }
    let half = C64::new(0.5 * h_step, 0.0);
    let full = C64::new(h_step, 0.0);
    let sixth = C64::new(h_step / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    for k in 0..n {
        let t = t0 + k as f64 * h_step;
        let spread = h_now.spectral_spread_bound();
        if spread * h_step > MAX_STEP_PHASE {
            return Err(Error::StepTooLarge {
                dt: h_step,
                spread,
                product: spread * h_step,
                limit: MAX_STEP_PHASE,
            });
        }
        let h_mid = h_of_t(t + 0.5 * h_step);
        let h_end = h_of_t(t0 + (k + 1) as f64 * h_step);
        let k1 = minus_i_h_psi(&h_now, &psi);
        let k2 = minus_i_h_psi(&h_mid, &psi.axpy(half, &k1));
        let k3 = minus_i_h_psi(&h_mid, &psi.axpy(half, &k2));
        let k4 = minus_i_h_psi(&h_end, &psi.axpy(full, &k3));
        let incr = k1.axpy(two, &k2).axpy(two, &k3) + k4;
        psi = psi.axpy(sixth, &incr);

        let t_next = t0 + (k + 1) as f64 * h_step;
        tracker.push(t_next, psi, h_end.expectation(&psi));
        if cfg.record_every > 0 && ((k + 1) % cfg.record_every == 0 || k + 1 == n) {
            samples.push((t_next, psi));
        }
        h_now = h_end;
    }

    let phases = tracker.finish();
    Ok(Propagation {
        psi,
        t: t1,
        accumulated_global_phase: phases.unwrapped.then_some(phases.total),
        phases,
        norm_drift: (psi.norm() - psi0.norm()).abs(),
        min_step_overlap: tracker.min_step_overlap(),
        samples,
        steps: n,
    })
}

/// [`propagate`] recording every step.
pub fn integrate_schrodinger<const N: usize, F>(
    psi0: CVec<N>,
    h_of_t: F,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Propagation<N>>
where
    F: Fn(f64) -> CMat<N>,
{
    propagate(psi0, h_of_t, t_span, &StepConfig::recording(dt, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{integrate_bloch, RabiParams};
    use crate::linalg::{cis, expm_hermitian, tensor_vec, TwoSpinState, ONE};
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn hamiltonian_1q_examples() {
        let p = RabiParams::new(3.0, 0.0, 2.0, 0.4).unwrap();
        let h = hamiltonian_1q(&p, 0.7);
        assert!(h.approx_eq(
            &Mat2::from_diag([C64::new(1.5, 0.0), C64::new(-1.5, 0.0)]),
            1e-15
        ));
        let p = RabiParams::new(3.0, 4.0, 0.0, 0.0).unwrap();
        let h = hamiltonian_1q(&p, 0.0);
        // eigenvalues ±½√(ω₀² + ω₁²) = ±2.5
        let tr = h.trace();
        let det = h.0[0][0] * h.0[1][1] - h.0[0][1] * h.0[1][0];
        let disc = (tr * tr - det * 4.0).sqrt();
        assert!(((tr + disc) * 0.5 - C64::new(2.5, 0.0)).norm() < 1e-14);
        let p = RabiParams::new(1.3, 0.8, 1.1, 0.2).unwrap();
        for t in [0.0, 0.5, 3.0] {
            let h = hamiltonian_1q(&p, t);
            assert!(h.trace().norm() < 1e-15);
            assert!(h.is_hermitian(1e-15));
            // matrix entries exactly as written
            assert!((h.0[0][1] - cis(-(1.1 * t + 0.2)) * 0.4).norm() < 1e-15);
        }
    }

    fn two_spin(j: f64) -> TwoSpinParams {
        TwoSpinParams {
            omega_a: 40.0,
            omega_b: 15.0,
            j,
            omega1: 0.0,
            omega: 40.0,
            phi: 0.0,
            drive_on_b: false,
        }
    }

    #[test]
    fn hamiltonian_2q_examples() {
        let p = two_spin(0.0);
        let half = C64::new(0.5, 0.0);
        let h0 = tensor(&pauli(Axis::Z).scale(half * p.omega_a), &Mat2::identity())
            + tensor(&Mat2::identity(), &pauli(Axis::Z).scale(half * p.omega_b));
        assert!(hamiltonian_2q(&p).approx_eq(&h0, 1e-14));

        let p = two_spin(0.7);
        let e = hamiltonian_2q(&p).diag();
        assert!(((e[0] - e[2]).re - p.omega_plus()).abs() < 1e-13);
        assert!(((e[1] - e[3]).re - p.omega_minus()).abs() < 1e-13);
        assert!((p.omega_plus() - (40.0 + PI * 0.7)).abs() < 1e-14);
        // coupling term is 2πJ S_az⊗S_bz
        let sz = pauli(Axis::Z).scale(half);
        let coupled =
            hamiltonian_2q(&two_spin(0.0)) + tensor(&sz, &sz).scale(C64::new(2.0 * PI * 0.7, 0.0));
        assert!(hamiltonian_2q(&p).approx_eq(&coupled, 1e-13));
    }

    #[test]
    fn two_spin_params_validation() {
        let mut p = two_spin(0.1);
        assert!(p.validate().is_ok());
        p.omega_b = 50.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn bloch_of_state_examples() {
        assert_eq!(bloch_of_state(&Spinor::basis(0)), Vec3::Z);
        let plus = CVec([ONE, ONE]).normalized();
        assert!(bloch_of_state(&plus).max_abs_diff(&Vec3::X) < 1e-15);
        let (th, al) = (1.1_f64, -0.6);
        let psi = CVec([C64::new((th / 2.0).cos(), 0.0), cis(al) * (th / 2.0).sin()]);
        assert!(bloch_of_state(&psi).max_abs_diff(&Vec3::from_spherical(th, al)) < 1e-15);
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let psi0 = CVec([C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let r = integrate_schrodinger(psi0, |_| Mat2::zeros(), (0.0, 2.0), 0.01).unwrap();
        assert_eq!(r.psi, psi0);
        assert_eq!(r.accumulated_global_phase, Some(0.0));
    }

    #[test]
    fn diagonal_evolution_phase() {
        let w0 = 2.0;
        let h = Mat2::from_diag([C64::new(w0 / 2.0, 0.0), C64::new(-w0 / 2.0, 0.0)]);
        let t1 = 10.0;
        let r = integrate_schrodinger(Spinor::basis(0), |_| h, (0.0, t1), 0.004 / w0).unwrap();
        assert!(
            r.psi
                .max_abs_diff(&Spinor::basis(0).scale(cis(-w0 * t1 / 2.0)))
                < 1e-9
        );
        let phase = r.accumulated_global_phase.unwrap();
        assert!((phase + w0 * t1 / 2.0).abs() < 1e-9, "{phase}");
        assert!((r.phases.dynamic + w0 * t1 / 2.0).abs() < 1e-9);
        assert!(r.phases.geometric.abs() < 1e-9);
    }

    #[test]
    fn rabi_flopping_on_resonance() {
        let p = RabiParams::new(6.0, 0.8, 6.0, 0.0).unwrap();
        let dt = 0.002 / 6.0;
        let r = integrate_schrodinger(Spinor::basis(0), |t| hamiltonian_1q(&p, t), (0.0, 8.0), dt)
            .unwrap();
        for (t, psi) in r.samples.iter().step_by(97) {
            let p_down = psi.0[1].norm_sqr();
            assert!((p_down - (0.8 * t / 2.0).sin().powi(2)).abs() < 1e-6);
        }
        assert!(r.norm_drift < 1e-8);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let h = rotating_hamiltonian_1q(10.0, 0.0, 0.0);
        let e = propagate(Spinor::basis(0), |_| h, (0.0, 1.0), &StepConfig::new(0.01));
        assert!(matches!(e, Err(Error::StepTooLarge { .. })));
        let e = propagate(Spinor::basis(0), |_| h, (0.0, 1.0), &StepConfig::new(0.0));
        assert!(matches!(e, Err(Error::InvalidStep { .. })));
    }

    #[test]
    fn energy_conserved_for_static_h() {
        let h = rotating_hamiltonian_1q(0.7, 1.3, 0.4);
        let psi0 = CVec([C64::new(0.8, 0.0), C64::new(0.36, 0.48)]);
        let r = integrate_schrodinger(psi0, |_| h, (0.0, 30.0), 0.005).unwrap();
        let e0 = h.expectation(&psi0);
        for (_, psi) in &r.samples {
            assert!((h.expectation(psi) - e0).abs() < 1e-8);
        }
    }

    #[test]
    fn uncoupled_two_spin_propagator_factorizes() {
        for drive_on_b in [false, true] {
            let p = TwoSpinParams {
                omega_a: 3.0,
                omega_b: 1.0,
                j: 0.0,
                omega1: 0.6,
                omega: 2.7,
                phi: 0.3,
                drive_on_b,
            };
            let dt = 0.0015;
            let span = (0.0, 5.0);
            let pa = RabiParams::new(p.omega_a, p.omega1, p.omega, p.phi).unwrap();
            let pb = RabiParams::new(
                p.omega_b,
                if drive_on_b { p.omega1 } else { 0.0 },
                p.omega,
                p.phi,
            )
            .unwrap();
            let mut cols_a = [Spinor::zeros(); 2];
            let mut cols_b = [Spinor::zeros(); 2];
            for i in 0..2 {
                cols_a[i] = propagate(
                    Spinor::basis(i),
                    |t| hamiltonian_1q(&pa, t),
                    span,
                    &StepConfig::new(dt),
                )
                .unwrap()
                .psi;
                cols_b[i] = propagate(
                    Spinor::basis(i),
                    |t| hamiltonian_1q(&pb, t),
                    span,
                    &StepConfig::new(dt),
                )
                .unwrap()
                .psi;
            }
            let ua = CMat::from_columns(&cols_a);
            let ub = CMat::from_columns(&cols_b);
            let mut cols = [TwoSpinState::zeros(); 4];
            for (i, c) in cols.iter_mut().enumerate() {
                *c = propagate(
                    TwoSpinState::basis(i),
                    |t| hamiltonian_2q_lab(&p, t),
                    span,
                    &StepConfig::new(dt),
                )
                .unwrap()
                .psi;
            }
            let u = CMat::from_columns(&cols);
            assert!(
                u.approx_eq(&tensor(&ua, &ub), 1e-6),
                "drive_on_b={drive_on_b}"
            );
        }
    }

    #[test]
    fn rotating_two_spin_frame_matches_lab() {
        for drive_on_b in [false, true] {
            let p = TwoSpinParams {
                omega_a: 5.0,
                omega_b: 2.0,
                j: 0.3,
                omega1: 0.7,
                omega: 4.6,
                phi: 0.2,
                drive_on_b,
            };
            let psi0 = tensor_vec(
                &CVec([C64::new(0.6, 0.0), C64::new(0.0, 0.8)]),
                &CVec([ONE, ONE]).normalized(),
            );
            let span = (0.0, 4.0);
            let lab = propagate(
                psi0,
                |t| hamiltonian_2q_lab(&p, t),
                span,
                &StepConfig::new(0.001),
            )
            .unwrap();
            let rot = propagate(
                psi0,
                |_| rotating_hamiltonian_2q(&p, p.omega, p.omega1, p.phi),
                span,
                &StepConfig::new(0.001),
            )
            .unwrap();
            let half = C64::new(0.5, 0.0);
            let frame = tensor(&pauli(Axis::Z).scale(half * p.omega), &Mat2::identity())
                + tensor(
                    &Mat2::identity(),
                    &pauli(Axis::Z).scale(half * p.frame_b(p.omega)),
                );
            let u = expm_hermitian(&frame, span.1).unwrap();
            assert!(lab.psi.max_abs_diff(&u.apply(&rot.psi)) < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn schrodinger_and_bloch_pictures_agree(
            w0 in 1.0..4.0f64,
            w1 in 0.1..1.5f64,
            det in -1.0..1.0f64,
            phi in 0.0..TAU,
            th in 0.0..3.1f64,
            al in 0.0..TAU,
        ) {
            let p = RabiParams::new(w0, w1, w0 - det, phi).unwrap();
            let psi0 = CVec([C64::new((th / 2.0).cos(), 0.0), cis(al) * (th / 2.0).sin()]);
            let dt = 0.005 / (w0 * w0 + w1 * w1).sqrt();
            let q = integrate_schrodinger(psi0, |t| hamiltonian_1q(&p, t), (0.0, 5.0), dt).unwrap();
            let c = integrate_bloch(bloch_of_state(&psi0), &p, (0.0, 5.0), dt).unwrap();
            prop_assert_eq!(q.samples.len(), c.len());
            for ((_, psi), b) in q.samples.iter().zip(&c) {
                prop_assert!(bloch_of_state(psi).max_abs_diff(&b.s) < 1e-5);
            }
        }
    }
}
