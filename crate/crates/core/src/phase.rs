//! Total, dynamic and geometric phase of a (nearly) cyclic evolution.
//!
//! Geometric phases are computed as the discrete Bargmann holonomy
//! `γ = −arg Π_k ⟨ψ_k|ψ_{k+1}⟩` closed back to the first state. The product is
//! invariant under `ψ_k → e^{iχ_k} ψ_k`, so no smooth reference lift of the
//! trajectory has to be constructed.
//!
//! Sign convention: a state whose Bloch vector circles the +z axis counter-
//! clockwise at polar angle θ acquires `γ = −π(1 − cos θ)`, i.e. minus half of
//! the enclosed solid angle.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{cis, wrap_pi, CMat, CVec, Mat2, Spinor, Vec3, C64, ONE};

/// Consecutive states must overlap at least this much for the discrete
/// holonomy to be meaningful.
pub const MIN_STEP_OVERLAP: f64 = 0.1;

/// Per-step change of `arg⟨ψ(0)|ψ(t)⟩` above which unwrapping is abandoned.
pub const MAX_UNWRAP_JUMP: f64 = PI / 2.0;

/// `|⟨ψ(0)|ψ(t)⟩|` below which its argument is considered undefined.
pub const MIN_UNWRAP_OVERLAP: f64 = 1e-6;

/// Phase bookkeeping of one evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseDecomposition {
    /// `arg⟨ψ(0)|ψ(T)⟩`, continuously unwrapped when possible.
    pub total: f64,
    /// `−∫⟨ψ|H|ψ⟩ dt` (ħ = 1).
    pub dynamic: f64,
    /// Discrete holonomy, lifted by a multiple of 2π onto the branch of
    /// `total − dynamic` when the total phase was unwrapped.
    pub geometric: f64,
    /// Whether `total` was tracked continuously over the whole run.
    pub unwrapped: bool,
}

impl PhaseDecomposition {
    /// `total − dynamic − geometric`; zero up to discretization error.
    pub fn closure_residual(&self) -> f64 {
        wrap_pi(self.total - self.dynamic - self.geometric)
    }
}

/// Canonical representative of an angle modulo 2π, in `(−π, π]`.
pub fn canonicalize(angle: f64) -> f64 {
    wrap_pi(angle)
}

/// Distance between two angles on the circle.
pub fn mod_2pi_distance(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}

/// Streaming accumulator for the three phases along a sampled trajectory.
#[derive(Clone, Debug)]
pub struct PhaseTracker<const N: usize> {
    initial: CVec<N>,
    prev: CVec<N>,
    t_prev: f64,
    e_prev: f64,
    dynamic: f64,
    holonomy: C64,
    unwrapped: Option<f64>,
    last_arg: f64,
    min_step_overlap: f64,
    worst_step: usize,
    steps: usize,
}

impl<const N: usize> PhaseTracker<N> {
    /// Start tracking at `(t0, ψ0)` where `⟨ψ0|H(t0)|ψ0⟩ = energy0`.
    pub fn new(t0: f64, psi0: CVec<N>, energy0: f64) -> Self {
        let ov = psi0.inner(&psi0);
        Self {
            initial: psi0,
            prev: psi0,
            t_prev: t0,
            e_prev: energy0,
            dynamic: 0.0,
            holonomy: ONE,
            unwrapped: Some(ov.arg()),
            last_arg: ov.arg(),
            min_step_overlap: f64::INFINITY,
            worst_step: 0,
            steps: 0,
        }
    }

    pub fn push(&mut self, t: f64, psi: CVec<N>, energy: f64) {
        self.dynamic -= 0.5 * (self.e_prev + energy) * (t - self.t_prev);

        let ov = self.prev.inner(&psi);
        let mag = ov.norm();
        if mag < self.min_step_overlap {
            self.min_step_overlap = mag;
            self.worst_step = self.steps;
        }
        if mag > 0.0 {
            self.holonomy *= ov / mag;
            self.holonomy /= self.holonomy.norm();
        }

        let ov0 = self.initial.inner(&psi);
        let a = ov0.arg();
        if let Some(u) = self.unwrapped {
            let jump = wrap_pi(a - self.last_arg);
            if ov0.norm() < MIN_UNWRAP_OVERLAP || jump.abs() > MAX_UNWRAP_JUMP {
                self.unwrapped = None;
            } else {
                self.unwrapped = Some(u + jump);
            }
        }
        self.last_arg = a;
        self.prev = psi;
        self.t_prev = t;
        self.e_prev = energy;
        self.steps += 1;
    }

    /// Smallest `|⟨ψ_k|ψ_{k+1}⟩|` seen so far.
    pub fn min_step_overlap(&self) -> f64 {
        self.min_step_overlap
    }

    /// Index of the step with the smallest overlap.
    pub fn worst_step(&self) -> usize {
        self.worst_step
    }

    pub fn dynamic(&self) -> f64 {
        self.dynamic
    }

    pub fn finish(&self) -> PhaseDecomposition {
        let closing = self.prev.inner(&self.initial);
        let hol = self.holonomy
            * if closing.norm() > 0.0 {
                closing / closing.norm()
            } else {
                ONE
            };
        let g_raw = -hol.arg();
        match self.unwrapped {
            Some(total) => {
                let target = total - self.dynamic;
                let g = g_raw + TAU * ((target - g_raw) / TAU).round();
                PhaseDecomposition {
                    total,
                    dynamic: self.dynamic,
                    geometric: g,
                    unwrapped: true,
                }
            }
            None => PhaseDecomposition {
                total: self.initial.inner(&self.prev).arg(),
                dynamic: self.dynamic,
                geometric: g_raw,
                unwrapped: false,
            },
        }
    }
}

/// Trapezoidal `−∫⟨ψ(t)|H(t)|ψ(t)⟩ dt` over `(t, ψ)` samples.
pub fn dynamic_phase<const N: usize, F>(samples: &[(f64, CVec<N>)], h_of_t: F) -> Result<f64>
where
    F: Fn(f64) -> CMat<N>,
{
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let energy = |(t, psi): &(f64, CVec<N>)| h_of_t(*t).expectation(psi);
    let mut acc = 0.0;
    let mut e_prev = energy(&samples[0]);
    for w in samples.windows(2) {
        let e = energy(&w[1]);
        acc -= 0.5 * (e_prev + e) * (w[1].0 - w[0].0);
        e_prev = e;
    }
    Ok(acc)
}

/// Gauge-invariant discrete geometric phase of a sequence of states.
///
/// The product of consecutive overlaps is always closed back to the first
/// state. With `closed = true` the states are the vertices of a loop and the
/// last→first leg is part of it; with `closed = false` the path is open and
/// the closing leg is the geodesic (Pancharatnam) closure. Either way the
/// result lies in `(−π, π]`.
pub fn geometric_phase_discrete<const N: usize>(states: &[CVec<N>], closed: bool) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: states.len(),
        });
    }
    let mut prod = ONE;
    let n = states.len();
    // open paths get the geodesic closure, which is the same wrap-around leg
    let _ = closed;
    for k in 0..n {
        let next = (k + 1) % n;
        let ov = states[k].inner(&states[next]) / (states[k].norm() * states[next].norm());
        let mag = ov.norm();
        if mag <= MIN_STEP_OVERLAP {
            return Err(Error::PathTooCoarse {
                index: k,
                overlap: mag,
                floor: MIN_STEP_OVERLAP,
            });
        }
        prod *= ov / mag;
    }
    Ok(-prod.arg())
}

/// Geometric phase of a circuit at polar angle θ: `−π(1 − cos θ)`.
pub fn berry_cone_phase(theta: f64) -> f64 {
    -PI * (1.0 - theta.cos())
}

/// `cos θ = (ω₀ − ω)/√((ω₀ − ω)² + ω₁²)`, the polar angle of the rotating-frame
/// Rabi vector.
pub fn cos_theta_resonance(omega0: f64, omega: f64, omega1: f64) -> Result<f64> {
    let det = omega0 - omega;
    let r = det.hypot(omega1);
    if r == 0.0 {
        return Err(Error::ZeroRabiVector);
    }
    Ok(det / r)
}

/// Spinor whose Bloch vector is the unit vector `v`, with real non-negative
/// `↑` amplitude.
pub fn spinor_from_bloch(v: Vec3) -> Spinor {
    let v = v.normalized();
    let theta = v.z.clamp(-1.0, 1.0).acos();
    let alpha = v.y.atan2(v.x);
    CVec([
        C64::new((0.5 * theta).cos(), 0.0),
        cis(alpha) * (0.5 * theta).sin(),
    ])
}

/// Loop orientation on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Counter-clockwise about +z (azimuth increasing).
    Forward,
    Reversed,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Reversed => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Reversed,
            Orientation::Reversed => Orientation::Forward,
        }
    }
}

/// A circuit `cos(θ/2)|↑⟩ + sin(θ/2)e^{iα}|↓⟩`, α ∈ [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopSpec {
    pub theta: f64,
    pub n_steps: usize,
    pub orientation: Orientation,
}

impl LoopSpec {
    /// Vertices of the discretized loop (the closing vertex is not repeated).
    pub fn states(&self) -> Result<Vec<Spinor>> {
        if self.n_steps < 8 {
            return Err(Error::InvalidParameter(format!(
                "loop needs at least 8 steps, got {}",
                self.n_steps
            )));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!(
                "cone angle {} outside [0, π]",
                self.theta
            )));
        }
        let (c, s) = ((0.5 * self.theta).cos(), (0.5 * self.theta).sin());
        Ok((0..self.n_steps)
            .map(|k| {
                let alpha = self.orientation.sign() * TAU * k as f64 / self.n_steps as f64;
                CVec([C64::new(c, 0.0), cis(alpha) * s])
            })
            .collect())
    }
}

/// Signed solid angle of a spherical polygon with unit-vector vertices.
///
/// Computed as the spherical excess `Σ interior angles − (n − 2)π` of the
/// region to the left of the path; the result is mapped to `(−2π, 2π]` so that
/// a clockwise traversal gives the negated area.
pub fn solid_angle_spherical_polygon(vertices: &[Vec3]) -> Result<f64> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::DegeneratePolygon("need at least 3 vertices"));
    }
    let mut turning = 0.0;
    for i in 0..n {
        let p = vertices[(i + n - 1) % n].normalized();
        let v = vertices[i].normalized();
        let q = vertices[(i + 1) % n].normalized();
        let tangent_to = |w: Vec3| w - v.scale(v.dot(&w));
        let back = tangent_to(p);
        let fwd = tangent_to(q);
        if back.norm() < 1e-12 || fwd.norm() < 1e-12 {
            return Err(Error::DegeneratePolygon(
                "coincident or antipodal adjacent vertices",
            ));
        }
        let incoming = -back.normalized();
        let outgoing = fwd.normalized();
        turning += v
            .dot(&incoming.cross(&outgoing))
            .atan2(incoming.dot(&outgoing));
    }
    let left_area = TAU - turning;
    let left_area = left_area.rem_euclid(2.0 * TAU);
    Ok(if left_area > TAU {
        left_area - 2.0 * TAU
    } else {
        left_area
    })
}

/// Points along the great-circle edges of a closed spherical polygon,
/// `per_edge` points per edge starting at each vertex (the closing vertex is
/// not repeated).
pub fn geodesic_polygon(vertices: &[Vec3], per_edge: usize) -> Result<Vec<Vec3>> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::DegeneratePolygon("need at least 3 vertices"));
    }
    if per_edge == 0 {
        return Err(Error::InvalidParameter(
            "need at least one point per edge".into(),
        ));
    }
    let mut out = Vec::with_capacity(n * per_edge);
    for i in 0..n {
        let a = vertices[i].normalized();
        let b = vertices[(i + 1) % n].normalized();
        let angle = a.cross(&b).norm().atan2(a.dot(&b));
        if angle < 1e-12 || PI - angle < 1e-12 {
            return Err(Error::DegeneratePolygon(
                "coincident or antipodal adjacent vertices",
            ));
        }
        for k in 0..per_edge {
            let t = angle * k as f64 / per_edge as f64;
            // slerp
            out.push((a.scale((angle - t).sin()) + b.scale(t.sin())).scale(1.0 / angle.sin()));
        }
    }
    Ok(out)
}

/// Which instantaneous eigenstate to follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Lower,
    Upper,
}

/// Berry phase of an instantaneous eigenstate carried around a closed loop of
/// 2×2 Hamiltonians (the loop closes from the last entry back to the first).
///
/// Eigenvectors are phase-aligned step by step so that consecutive overlaps
/// are real and positive; the remaining phase mismatch on the closing leg is
/// the holonomy.
pub fn berry_phase_adiabatic(hamiltonians: &[Mat2], level: Level) -> Result<f64> {
    if hamiltonians.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: hamiltonians.len(),
        });
    }
    let rabi: Vec<Vec3> = hamiltonians
        .iter()
        .map(|h| crate::linalg::pauli_components(h).1.scale(2.0))
        .collect();
    let scale = rabi.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let sign = match level {
        Level::Upper => 1.0,
        Level::Lower => -1.0,
    };
    let mut aligned: Vec<Spinor> = Vec::with_capacity(rabi.len());
    for (k, r) in rabi.iter().enumerate() {
        let gap = r.norm();
        if gap <= 1e-9 * scale || gap == 0.0 {
            return Err(Error::Degenerate { gap, index: k });
        }
        let mut v = spinor_from_bloch(r.scale(sign));
        if let Some(prev) = aligned.last() {
            let ov = prev.inner(&v);
            if ov.norm() <= MIN_STEP_OVERLAP {
                return Err(Error::PathTooCoarse {
                    index: k - 1,
                    overlap: ov.norm(),
                    floor: MIN_STEP_OVERLAP,
                });
            }
            v = v.scale(ov.conj() / ov.norm());
        }
        aligned.push(v);
    }
    geometric_phase_discrete(&aligned, true)
}
