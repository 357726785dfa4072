//! Bloch-vector picture of a driven spin-half: `ds/dt = Ω × s`, the lab and
//! rotating frames, and a fixed-step RK4 integrator for the classical vector.
//!
//! All frequencies are angular (rad/s).

use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Parameters of a rotating drive on a single spin within the rotating-wave
/// approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiParams {
    /// Transition frequency ω₀ (rad/s).
    pub omega0: f64,
    /// Drive amplitude ω₁ ≥ 0 (rad/s).
    pub omega1: f64,
    /// Drive frequency ω (rad/s).
    pub omega: f64,
    /// Drive phase φ (rad).
    pub phi: f64,
}

impl RabiParams {
    pub fn new(omega0: f64, omega1: f64, omega: f64, phi: f64) -> Result<Self> {
        let p = Self {
            omega0,
            omega1,
            omega,
            phi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.omega0, self.omega1, self.omega, self.phi]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidParameter(
                "Rabi parameters must be finite".into(),
            ));
        }
        if self.omega1 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "drive amplitude omega1 must be >= 0, got {}",
                self.omega1
            )));
        }
        Ok(())
    }

    /// Detuning ω₀ − ω.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState {
    pub t: f64,
    pub s: Vec3,
}

/// Right-hand side of the Bloch equation, `Ω × s`.
pub fn bloch_derivative(s: Vec3, omega_vec: Vec3) -> Vec3 {
    omega_vec.cross(&s)
}

/// Lab-frame Rabi vector `(ω₁cos(ωt+φ), ω₁sin(ωt+φ), ω₀)`.
pub fn lab_rabi_vector(p: &RabiParams, t: f64) -> Vec3 {
    let arg = p.omega * t + p.phi;
    Vec3::new(p.omega1 * arg.cos(), p.omega1 * arg.sin(), p.omega0)
}

/// Static Rabi vector seen in the frame rotating at the drive frequency.
pub fn rotating_rabi_vector(p: &RabiParams) -> Vec3 {
    Vec3::new(
        p.omega1 * p.phi.cos(),
        p.omega1 * p.phi.sin(),
        p.omega0 - p.omega,
    )
}

/// Rotation by `angle` about +z.
pub fn rotate_z(v: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// Generator of z-rotations, `R_z(α) = exp(α M_z)`.
pub const M_Z: [[f64; 3]; 3] = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];

pub fn apply_mz(v: Vec3) -> Vec3 {
    let m = &M_Z;
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// `s' = R_z(ωt)⁻¹ s`.
pub fn to_rotating_frame(s_lab: Vec3, omega: f64, t: f64) -> Vec3 {
    rotate_z(s_lab, -omega * t)
}

/// `s = R_z(ωt) s'`.
pub fn from_rotating_frame(s_rot: Vec3, omega: f64, t: f64) -> Vec3 {
    rotate_z(s_rot, omega * t)
}

fn check_span(t_span: (f64, f64), dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep { dt });
    }
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Error::InvalidSpan { start: t0, end: t1 });
    }
    Ok(((t1 - t0) / dt).ceil().max(0.0) as usize)
}

/// Integrate `ds/dt = Ω(t) × s` with classical RK4 on a uniform grid whose
/// step is the largest value `≤ dt` that divides the span. Every step is
/// returned, including the initial point.
pub fn integrate_bloch_field<F>(
    s0: Vec3,
    field: F,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Vec<BlochState>>
where
    F: Fn(f64) -> Vec3,
{
    let n = check_span(t_span, dt)?;
    let (t0, t1) = t_span;
    let h = if n == 0 { 0.0 } else { (t1 - t0) / n as f64 };
    let mut out = Vec::with_capacity(n + 1);
    let mut s = s0;
    out.push(BlochState { t: t0, s });
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let k1 = bloch_derivative(s, field(t));
        let k2 = bloch_derivative(s + k1.scale(0.5 * h), field(t + 0.5 * h));
        let k3 = bloch_derivative(s + k2.scale(0.5 * h), field(t + 0.5 * h));
        let k4 = bloch_derivative(s + k3.scale(h), field(t + h));
        s = s + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
        out.push(BlochState {
            t: t0 + (k + 1) as f64 * h,
            s,
        });
    }
    Ok(out)
}

/// Lab-frame integration of a spin driven by `p`.
pub fn integrate_bloch(
    s0: Vec3,
    p: &RabiParams,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Vec<BlochState>> {
    p.validate()?;
    integrate_bloch_field(s0, |t| lab_rabi_vector(p, t), t_span, dt)
}

/// Integrate in the rotating frame with the static `Ω'` and map each sample
/// back to the lab frame.
pub fn integrate_bloch_rotating(
    s0_lab: Vec3,
    p: &RabiParams,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Vec<BlochState>> {
    p.validate()?;
    let omega_rot = rotating_rabi_vector(p);
    let s0 = to_rotating_frame(s0_lab, p.omega, t_span.0);
    let traj = integrate_bloch_field(s0, |_| omega_rot, t_span, dt)?;
    Ok(traj
        .into_iter()
        .map(|b| BlochState {
            t: b.t,
            s: from_rotating_frame(b.s, p.omega, b.t),
        })
        .collect())
}
