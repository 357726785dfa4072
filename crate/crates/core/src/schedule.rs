//! Piecewise-smooth control schedules `(ω₁(t), ω(t), φ(t))` and π-pulses.
//!
//! A cone loop is `ramp_up → phase_sweep → ramp_down`. During the ramps the
//! drive amplitude rises from zero while the drive frequency moves from a
//! start value to its plateau value: at `t = 0` the rotating-frame field
//! points along +z, so `|↑⟩` is the aligned eigenstate for every sign of the
//! plateau detuning, and the field then turns down to its plateau polar
//! angle at (nearly) constant magnitude.

use std::f64::consts::{PI, TAU};

use crate::bloch::RabiParams;
use crate::error::{Error, Result};
use crate::gates::{Gate1, Gate2};
use crate::linalg::{pauli, tensor, wrap_pi, Axis, Mat2};
use crate::phase::Orientation;
use crate::schrodinger::TwoSpinParams;

/// Instantaneous drive settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Controls {
    /// Drive amplitude (rad/s).
    pub omega1: f64,
    /// Drive frequency (rad/s).
    pub omega: f64,
    /// Drive phase (rad).
    pub phi: f64,
}

/// Which spin a π-pulse flips.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PulseTarget {
    Single,
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    RampUp,
    PhaseSweep,
    RampDown,
    Idle,
    PiPulse(PulseTarget),
}

impl SegmentKind {
    pub fn is_pi(self) -> bool {
        matches!(self, SegmentKind::PiPulse(_))
    }

    pub fn label(self) -> &'static str {
        match self {
            SegmentKind::RampUp => "ramp_up",
            SegmentKind::PhaseSweep => "phase_sweep",
            SegmentKind::RampDown => "ramp_down",
            SegmentKind::Idle => "idle",
            SegmentKind::PiPulse(PulseTarget::Single) => "pi_pulse",
            SegmentKind::PiPulse(PulseTarget::A) => "pi_pulse_a",
            SegmentKind::PiPulse(PulseTarget::B) => "pi_pulse_b",
        }
    }
}

/// Interpolation profile of ramp segments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RampShape {
    /// `(1 − cos πτ)/2`.
    #[default]
    RaisedCosine,
    Linear,
}

impl RampShape {
    /// Profile value at normalized time `tau ∈ [0, 1]`.
    pub fn profile(self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, 1.0);
        match self {
            RampShape::RaisedCosine => 0.5 * (1.0 - (PI * tau).cos()),
            RampShape::Linear => tau,
        }
    }
}

/// Fraction of the sweep spent in each rate taper of [`SweepProfile::Tapered`].
pub const SWEEP_TAPER_FRACTION: f64 = 0.05;

/// Time profile of the azimuthal sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SweepProfile {
    /// Constant rate with raised-cosine tapers of [`SWEEP_TAPER_FRACTION`] at
    /// both ends. The rate starts and stops smoothly, so the apparent tilt of
    /// the field in the co-rotating frame switches on adiabatically instead
    /// of kicking the state; the short tapers keep `∫φ̇³dt` (which sets the
    /// echo's dynamic residual) close to the linear value.
    #[default]
    Tapered,
    /// Constant rate.
    Linear,
}

impl SweepProfile {
    pub fn profile(self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, 1.0);
        match self {
            SweepProfile::Tapered => {
                let f = SWEEP_TAPER_FRACTION;
                // integral of the rate (1 − cos(πu/f))/2 over [0, u]
                let edge = |u: f64| 0.5 * u - f / TAU * (PI * u / f).sin();
                let area = if tau < f {
                    edge(tau)
                } else if tau <= 1.0 - f {
                    0.5 * f + (tau - f)
                } else {
                    (1.0 - f) - edge(1.0 - tau)
                };
                area / (1.0 - f)
            }
            SweepProfile::Linear => tau,
        }
    }
}

/// Ramp and sweep profiles of a schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Profiles {
    pub ramp: RampShape,
    pub sweep: SweepProfile,
}

impl Profiles {
    pub fn new(ramp: RampShape, sweep: SweepProfile) -> Self {
        Self { ramp, sweep }
    }
}

/// How π-pulses are realized.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum PiPulseMode {
    /// Instantaneous σx on the target spin.
    #[default]
    Ideal,
    /// Square pulse `½·rabi·σx` on the target for a time `π/rabi`, on top of
    /// the idle Hamiltonian.
    Finite { rabi: f64 },
}

/// How a ramp moves between its start and end controls.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum RampPath {
    /// Each control follows the ramp profile independently.
    #[default]
    Linear,
    /// Polar interpolation in the `(transition − ω, ω₁)` plane: the rotating-
    /// frame field of the reference transition turns at a smoothly varying
    /// magnitude, so its gap never closes mid-ramp.
    Polar { transition: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub duration: f64,
    pub start: Controls,
    pub end: Controls,
    pub path: RampPath,
}

impl Segment {
    /// Controls at time `t` after the segment start.
    pub fn controls_at(&self, t: f64, profiles: Profiles) -> Controls {
        let tau = if self.duration > 0.0 {
            (t / self.duration).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let w = match self.kind {
            SegmentKind::RampUp | SegmentKind::RampDown => profiles.ramp.profile(tau),
            SegmentKind::PhaseSweep => profiles.sweep.profile(tau),
            SegmentKind::Idle | SegmentKind::PiPulse(_) => 0.0,
        };
        let lerp = |a: f64, b: f64| a + (b - a) * w;
        if let (SegmentKind::RampUp | SegmentKind::RampDown, RampPath::Polar { transition }) =
            (self.kind, self.path)
        {
            let polar = |c: &Controls| {
                (
                    (transition - c.omega).hypot(c.omega1),
                    c.omega1.atan2(transition - c.omega),
                )
            };
            let ((ra, aa), (rb, ab)) = (polar(&self.start), polar(&self.end));
            let (r, alpha) = (lerp(ra, rb), lerp(aa, ab));
            return Controls {
                omega1: r * alpha.sin(),
                omega: transition - r * alpha.cos(),
                phi: lerp(self.start.phi, self.end.phi),
            };
        }
        Controls {
            omega1: lerp(self.start.omega1, self.end.omega1),
            omega: lerp(self.start.omega, self.end.omega),
            phi: lerp(self.start.phi, self.end.phi),
        }
    }
}

// Absolute tolerance for control continuity between segments.
const CONTINUITY_TOL: f64 = 1e-9;

fn controls_match(a: &Controls, b: &Controls) -> bool {
    let scale = 1.0 + a.omega.abs().max(b.omega.abs());
    (a.omega1 - b.omega1).abs() <= CONTINUITY_TOL * scale
        && (a.omega - b.omega).abs() <= CONTINUITY_TOL * scale
        // the phase is irrelevant while the drive is off
        && (a.omega1.max(b.omega1) == 0.0 || wrap_pi(a.phi - b.phi).abs() <= CONTINUITY_TOL)
}

/// Ordered, contiguous list of segments.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    segments: Vec<Segment>,
    profiles: Profiles,
}

impl PulseSchedule {
    /// Validates durations and control continuity; jumps are only allowed
    /// next to π-pulse segments.
    pub fn new(segments: Vec<Segment>, profiles: Profiles) -> Result<Self> {
        for s in &segments {
            let ok = s.duration.is_finite()
                && (s.duration > 0.0 || (s.kind.is_pi() && s.duration == 0.0));
            if !ok {
                return Err(Error::InvalidDuration {
                    name: s.kind.label(),
                    value: s.duration,
                });
            }
            if s.start.omega1 < 0.0 || s.end.omega1 < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative drive amplitude in {}",
                    s.kind.label()
                )));
            }
        }
        for (k, w) in segments.windows(2).enumerate() {
            if w[0].kind.is_pi() || w[1].kind.is_pi() {
                continue;
            }
            if !controls_match(&w[0].end, &w[1].start) {
                return Err(Error::InvalidParameter(format!(
                    "controls jump between segment {k} ({}) and {} ({})",
                    w[0].kind.label(),
                    k + 1,
                    w[1].kind.label()
                )));
            }
        }
        Ok(Self { segments, profiles })
    }

    /// Concatenate schedules in order; all parts must share their profiles.
    pub fn concat(parts: &[PulseSchedule]) -> Result<Self> {
        let profiles = parts.first().map(|p| p.profiles).unwrap_or_default();
        if parts.iter().any(|p| p.profiles != profiles) {
            return Err(Error::InvalidParameter(
                "cannot concatenate schedules with different profiles".into(),
            ));
        }
        Self::new(
            parts
                .iter()
                .flat_map(|p| p.segments.iter().copied())
                .collect(),
            profiles,
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn profiles(&self) -> Profiles {
        self.profiles
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Start times of every segment.
    pub fn offsets(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let t0 = t;
                t += s.duration;
                t0
            })
            .collect()
    }

    /// Controls at absolute time `t` (clamped to the schedule).
    pub fn controls_at(&self, t: f64) -> Option<Controls> {
        let mut t0 = 0.0;
        let last = self.segments.len().checked_sub(1)?;
        for (k, s) in self.segments.iter().enumerate() {
            if t <= t0 + s.duration || k == last {
                return Some(s.controls_at(t - t0, self.profiles));
            }
            t0 += s.duration;
        }
        None
    }

    /// The same schedule with π-pulse segments realized in `mode`.
    pub fn with_pi_mode(&self, mode: PiPulseMode) -> Self {
        let duration = match mode {
            PiPulseMode::Ideal => 0.0,
            PiPulseMode::Finite { rabi } => PI / rabi,
        };
        let segments = self
            .segments
            .iter()
            .map(|s| {
                if s.kind.is_pi() {
                    Segment { duration, ..*s }
                } else {
                    *s
                }
            })
            .collect();
        Self {
            segments,
            profiles: self.profiles,
        }
    }
}

/// Durations of the ramps and of the phase sweep of one cone loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopTiming {
    pub ramp_time: f64,
    pub sweep_time: f64,
}

/// Default sweep length in units of `1/|Ω′|`.
pub const DEFAULT_SWEEP_CYCLES: f64 = 500.0;
/// Default ramp length as a fraction of the sweep.
pub const DEFAULT_RAMP_FRACTION: f64 = 0.5;

impl LoopTiming {
    pub fn new(ramp_time: f64, sweep_time: f64) -> Result<Self> {
        let t = Self {
            ramp_time,
            sweep_time,
        };
        t.validate()?;
        Ok(t)
    }

    /// `sweep_time = 500/rabi`, each ramp half of that.
    pub fn adiabatic(rabi: f64) -> Result<Self> {
        if !(rabi > 0.0 && rabi.is_finite()) {
            return Err(Error::ZeroRabiVector);
        }
        let sweep = DEFAULT_SWEEP_CYCLES / rabi;
        Self::new(DEFAULT_RAMP_FRACTION * sweep, sweep)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ramp_time", self.ramp_time),
            ("sweep_time", self.sweep_time),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidDuration { name, value: v });
            }
        }
        Ok(())
    }

    pub fn loop_duration(&self) -> f64 {
        2.0 * self.ramp_time + self.sweep_time
    }
}

/// Drive frequency at the start of a loop: chosen so that the branch with
/// the smallest plateau detuning `Δ` starts at detuning `+√(Δ² + ω₁²)`.
/// Every other branch then starts at a larger positive detuning.
pub fn loop_start_frequency(omega: f64, omega1: f64, min_transition: f64) -> f64 {
    if omega1 == 0.0 {
        return omega;
    }
    let det = min_transition - omega;
    omega - (det.hypot(omega1) - det)
}

/// Cone loop with plateau `(omega1, omega)` and phase sweep from `phi0`.
pub fn cone_loop(
    omega1: f64,
    omega: f64,
    phi0: f64,
    min_transition: f64,
    timing: &LoopTiming,
    orientation: Orientation,
    profiles: Profiles,
) -> Result<PulseSchedule> {
    timing.validate()?;
    if !(omega1 >= 0.0 && omega1.is_finite() && omega.is_finite() && phi0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bad loop controls omega1={omega1}, omega={omega}, phi={phi0}"
        )));
    }
    if omega1 == 0.0 {
        let c = Controls {
            omega1: 0.0,
            omega,
            phi: phi0,
        };
        let idle = Segment {
            kind: SegmentKind::Idle,
            duration: timing.loop_duration(),
            start: c,
            end: c,
            path: RampPath::Linear,
        };
        return PulseSchedule::new(vec![idle], profiles);
    }
    let w_start = loop_start_frequency(omega, omega1, min_transition);
    let phi1 = phi0 + orientation.sign() * TAU;
    let off = Controls {
        omega1: 0.0,
        omega: w_start,
        phi: phi0,
    };
    let on = Controls {
        omega1,
        omega,
        phi: phi0,
    };
    let on_end = Controls { phi: phi1, ..on };
    let off_end = Controls { phi: phi1, ..off };
    let path = RampPath::Polar {
        transition: min_transition,
    };
    PulseSchedule::new(
        vec![
            Segment {
                kind: SegmentKind::RampUp,
                duration: timing.ramp_time,
                start: off,
                end: on,
                path,
            },
            Segment {
                kind: SegmentKind::PhaseSweep,
                duration: timing.sweep_time,
                start: on,
                end: on_end,
                path,
            },
            Segment {
                kind: SegmentKind::RampDown,
                duration: timing.ramp_time,
                start: on_end,
                end: off_end,
                path,
            },
        ],
        profiles,
    )
}

/// Single-spin cone loop for the plateau field of `p`.
pub fn build_cone_loop(
    p: &RabiParams,
    timing: &LoopTiming,
    orientation: Orientation,
    profiles: Profiles,
) -> Result<PulseSchedule> {
    p.validate()?;
    cone_loop(
        p.omega1,
        p.omega,
        p.phi,
        p.omega0,
        timing,
        orientation,
        profiles,
    )
}

/// Cone loop driving spin `a` of a coupled pair; both `ω±` branches start
/// aligned with their rotating-frame field.
pub fn build_cone_loop_two_spin(
    p: &TwoSpinParams,
    timing: &LoopTiming,
    orientation: Orientation,
    profiles: Profiles,
) -> Result<PulseSchedule> {
    p.validate()?;
    let low = p.omega_plus().min(p.omega_minus());
    cone_loop(p.omega1, p.omega, p.phi, low, timing, orientation, profiles)
}

/// Zero-duration π-pulse segment holding `at` fixed.
pub fn pi_segment(target: PulseTarget, at: Controls) -> Segment {
    Segment {
        kind: SegmentKind::PiPulse(target),
        duration: 0.0,
        start: at,
        end: at,
        path: RampPath::Linear,
    }
}

/// `C → π → C̄ → π`.
pub fn spin_echo_schedule(
    p: &RabiParams,
    timing: &LoopTiming,
    profiles: Profiles,
) -> Result<PulseSchedule> {
    let c = build_cone_loop(p, timing, Orientation::Forward, profiles)?;
    let cbar = build_cone_loop(p, timing, Orientation::Reversed, profiles)?;
    let pi_c = PulseSchedule::new(
        vec![pi_segment(PulseTarget::Single, last_controls(&c))],
        profiles,
    )?;
    let pi_cbar = PulseSchedule::new(
        vec![pi_segment(PulseTarget::Single, last_controls(&cbar))],
        profiles,
    )?;
    PulseSchedule::concat(&[c, pi_c, cbar, pi_cbar])
}

/// `C → π_a → C̄ → π_b → C → π_a → C̄ → π_b`.
pub fn conditional_schedule(
    p: &TwoSpinParams,
    timing: &LoopTiming,
    profiles: Profiles,
) -> Result<PulseSchedule> {
    let c = build_cone_loop_two_spin(p, timing, Orientation::Forward, profiles)?;
    let cbar = build_cone_loop_two_spin(p, timing, Orientation::Reversed, profiles)?;
    let pi_a = PulseSchedule::new(
        vec![pi_segment(PulseTarget::A, last_controls(&c))],
        profiles,
    )?;
    let pi_b = PulseSchedule::new(
        vec![pi_segment(PulseTarget::B, last_controls(&cbar))],
        profiles,
    )?;
    PulseSchedule::concat(&[
        c.clone(),
        pi_a.clone(),
        cbar.clone(),
        pi_b.clone(),
        c,
        pi_a,
        cbar,
        pi_b,
    ])
}

fn last_controls(s: &PulseSchedule) -> Controls {
    s.segments().last().map(|g| g.end).unwrap_or(Controls {
        omega1: 0.0,
        omega: 0.0,
        phi: 0.0,
    })
}

/// Ideal single-spin π-pulse `σx`.
pub fn pi_pulse() -> Gate1 {
    Gate1::new(pauli(Axis::X)).expect("σx is unitary")
}

/// Ideal π-pulse on one spin of a pair: `σx ⊗ 1` or `1 ⊗ σx`.
pub fn pi_pulse_two_spin(target: PulseTarget) -> Result<Gate2> {
    let (x, id) = (pauli(Axis::X), Mat2::identity());
    let m = match target {
        PulseTarget::A => tensor(&x, &id),
        PulseTarget::B => tensor(&id, &x),
        PulseTarget::Single => {
            return Err(Error::InvalidParameter(
                "single-spin pulse applied to a two-spin system".into(),
            ));
        }
    };
    Gate2::new(m)
}
