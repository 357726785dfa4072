//! Desk-scale invariant suite behind `geoqc verify`.
//!
//! Every check is deterministic: random inputs come from a ChaCha stream
//! keyed by the configured seed and the check's position in [`CHECKS`], so
//! running a subset gives the same numbers as the full suite.

use std::f64::consts::{FRAC_PI_3, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bloch::{integrate_bloch, integrate_bloch_rotating, RabiParams};
use crate::error::Result;
use crate::gates::{
    controlled_phase, gate_fidelity, hadamard, local_phase_equivalence, prepare_network, Gate2,
};
use crate::linalg::{
    cis, expm_hermitian, pauli, Axis, CMat, CVec, Mat2, Mat4, Spinor, Vec3, C64, I,
};
use crate::phase::{
    berry_cone_phase, geodesic_polygon, geometric_phase_discrete, mod_2pi_distance,
    solid_angle_spherical_polygon, spinor_from_bloch, LoopSpec, Orientation,
};
use crate::schedule::LoopTiming;
use crate::schrodinger::{bloch_of_state, hamiltonian_1q, integrate_schrodinger, TwoSpinParams};
use crate::sequences::{
    delta_gamma, measure_cone_phase, simulate_conditional_sequence, simulate_spin_echo_1q,
    two_spin_timing, RunOptions,
};
use crate::surface::{fault_tolerance_surface, GridAxis};

/// Suite-wide settings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Run the cone-phase check with a deliberately fast sweep (negative control).
    pub diabatic: bool,
}

/// Sweep and ramp time (in units of `1/|Ω′|`) of the negative control.
pub const DIABATIC_SWEEP: f64 = 10.0;
pub const DIABATIC_RAMP: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One measured quantity against its limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub label: &'static str,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
}

impl Measurement {
    pub fn at_most(label: &'static str, value: f64, limit: f64) -> Self {
        Self {
            label,
            value,
            limit,
            bound: Bound::AtMost,
        }
    }

    pub fn at_least(label: &'static str, value: f64, limit: f64) -> Self {
        Self {
            label,
            value,
            limit,
            bound: Bound::AtLeast,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.value <= self.limit,
            Bound::AtLeast => self.value >= self.limit,
        }
    }
}

pub struct Check {
    pub name: &'static str,
    pub description: &'static str,
    run: fn(&VerifyConfig, &mut ChaCha8Rng) -> Result<Vec<Measurement>>,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub measurements: Vec<Measurement>,
    /// Set when the check could not produce its measurements.
    pub error: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.measurements.iter().all(Measurement::passed)
    }
}

pub const CHECKS: &[Check] = &[
    Check {
        name: "pauli-algebra",
        description: "σ_i² = 1 and σ_x σ_y = iσ_z (cyclic)",
        run: pauli_algebra,
    },
    Check {
        name: "expm-unitarity",
        description: "exp(−iHt) is unitary for random Hermitian 2×2 and 4×4 H",
        run: expm_unitarity,
    },
    Check {
        name: "bloch-vs-schrodinger",
        description: "Bloch ODE vs Bloch vector of the Schrödinger state, 10 random drives",
        run: bloch_vs_schrodinger,
    },
    Check {
        name: "lab-vs-rotating",
        description: "lab-frame vs rotating-frame Bloch integration, 10 random drives",
        run: lab_vs_rotating,
    },
    Check {
        name: "cone-holonomy",
        description: "discrete holonomy of a latitude loop vs −π(1−cos θ)",
        run: cone_holonomy,
    },
    Check {
        name: "solid-angle-law",
        description: "holonomy of 20 random geodesic triangles vs −½·excess",
        run: solid_angle_law,
    },
    Check {
        name: "gauge-invariance",
        description: "holonomy unchanged by random per-state phases",
        run: gauge_invariance,
    },
    Check {
        name: "cone-phase",
        description: "simulated cone loop at θ = π/3: phase error and return fidelity",
        run: cone_phase,
    },
    Check {
        name: "rate-independence",
        description: "γ at sweep times T and 3T agree while δ does not",
        run: rate_independence,
    },
    Check {
        name: "spin-echo",
        description: "echo phase difference, dynamic residual, congruence with 4π cos θ",
        run: spin_echo,
    },
    Check {
        name: "delta-gamma",
        description: "Δγ(ω = ω_a, ω₁ = πJ) = π√2, even in detuning, odd in J",
        run: delta_gamma_closed_form,
    },
    Check {
        name: "conditional-gate",
        description: "eight-step sequence vs diag(e^{2iΔγ}, e^{−2iΔγ}, e^{−2iΔγ}, e^{2iΔγ})",
        run: conditional_gate,
    },
    Check {
        name: "surface-peak-slope",
        description: "relative slope of Δγ at the row peak, detuning = 2πJ",
        run: surface_peak_slope,
    },
    Check {
        name: "gate-network",
        description: "H·P(2θ)·H·P(π/2+φ)|0⟩ for 100 random (θ, φ)",
        run: gate_network,
    },
    Check {
        name: "local-phase-round-trip",
        description: "diagonal gate → local phases + B(φ) → same gate",
        run: local_phase_round_trip,
    },
    Check {
        name: "hadamard-involution",
        description: "H² = 1",
        run: hadamard_involution,
    },
    Check {
        name: "controlled-phase-composition",
        description: "B(a)·B(b) = B(a+b), B(0) = 1",
        run: controlled_phase_composition,
    },
];

pub fn find(name: &str) -> Option<usize> {
    CHECKS.iter().position(|c| c.name == name)
}

fn rng_for(cfg: &VerifyConfig, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    rng
}

pub fn run_check(index: usize, cfg: &VerifyConfig) -> CheckResult {
    let check = &CHECKS[index];
    let mut rng = rng_for(cfg, index);
    match (check.run)(cfg, &mut rng) {
        Ok(measurements) => CheckResult {
            name: check.name,
            measurements,
            error: None,
        },
        Err(e) => CheckResult {
            name: check.name,
            measurements: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Run the selected checks in parallel; results keep the order of `indices`.
pub fn run_checks(indices: &[usize], cfg: &VerifyConfig) -> Vec<CheckResult> {
    indices.par_iter().map(|&i| run_check(i, cfg)).collect()
}

fn max_diff<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> f64 {
    a.max_abs_diff(b)
}

fn pauli_algebra(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let [x, y, z] = [pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)];
    let id = Mat2::identity();
    let mut worst = 0.0f64;
    for s in [x, y, z] {
        worst = worst.max(max_diff(&(s * s), &id));
    }
    for (a, b, c) in [(x, y, z), (y, z, x), (z, x, y)] {
        worst = worst.max(max_diff(&(a * b), &c.scale(I)));
        worst = worst.max(max_diff(&(b * a), &c.scale(-I)));
    }
    Ok(vec![Measurement::at_most("max_deviation", worst, 1e-15)])
}

fn random_hermitian<const N: usize>(rng: &mut ChaCha8Rng) -> CMat<N> {
    let mut h = CMat::<N>::zeros();
    for i in 0..N {
        h[(i, i)] = C64::new(rng.gen_range(-2.0..2.0), 0.0);
        for j in i + 1..N {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

fn expm_unitarity(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t = rng.gen_range(0.0..10.0);
        worst = worst.max(expm_hermitian(&random_hermitian::<2>(rng), t)?.unitary_deviation());
        worst = worst.max(expm_hermitian(&random_hermitian::<4>(rng), t)?.unitary_deviation());
    }
    Ok(vec![Measurement::at_most(
        "max_unitary_deviation",
        worst,
        1e-10,
    )])
}

fn random_drive(rng: &mut ChaCha8Rng) -> Result<RabiParams> {
    let w0 = rng.gen_range(1.0..4.0);
    let det = rng.gen_range(-1.0..1.0);
    RabiParams::new(
        w0,
        rng.gen_range(0.1..1.5),
        w0 - det,
        rng.gen_range(0.0..2.0 * PI),
    )
}

fn bloch_vs_schrodinger(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = random_drive(rng)?;
        let psi0 = spinor_from_bloch(Vec3::from_spherical(
            rng.gen_range(0.0..PI),
            rng.gen_range(0.0..2.0 * PI),
        ));
        let dt = 0.005 / p.omega0.hypot(p.omega1);
        let q = integrate_schrodinger(psi0, |t| hamiltonian_1q(&p, t), (0.0, 5.0), dt)?;
        let c = integrate_bloch(bloch_of_state(&psi0), &p, (0.0, 5.0), dt)?;
        for ((_, psi), b) in q.samples.iter().zip(&c) {
            worst = worst.max(bloch_of_state(psi).max_abs_diff(&b.s));
        }
    }
    Ok(vec![Measurement::at_most(
        "max_component_diff",
        worst,
        1e-5,
    )])
}

fn lab_vs_rotating(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = random_drive(rng)?;
        let s0 = Vec3::from_spherical(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
        let dt = 0.01 / p.omega0.hypot(p.omega1);
        let lab = integrate_bloch(s0, &p, (0.0, 6.0), dt)?;
        let rot = integrate_bloch_rotating(s0, &p, (0.0, 6.0), dt)?;
        for (a, b) in lab.iter().zip(&rot) {
            worst = worst.max(a.s.max_abs_diff(&b.s));
        }
    }
    Ok(vec![Measurement::at_most(
        "max_component_diff",
        worst,
        1e-6,
    )])
}

fn cone_holonomy(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for theta in [PI / 6.0, PI / 4.0, FRAC_PI_3, PI / 2.0, 2.0 * FRAC_PI_3] {
        for orientation in [Orientation::Forward, Orientation::Reversed] {
            let states = LoopSpec {
                theta,
                n_steps: 4000,
                orientation,
            }
            .states()?;
            let g = geometric_phase_discrete(&states, true)?;
            worst = worst.max(mod_2pi_distance(
                g,
                orientation.sign() * berry_cone_phase(theta),
            ));
        }
    }
    Ok(vec![Measurement::at_most("max_error_rad", worst, 1e-5)])
}

/// Uniform point on the unit sphere.
fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

fn solid_angle_law(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let tri = [random_unit(rng), random_unit(rng), random_unit(rng)];
        // skip nearly degenerate draws; they say nothing about the law
        let separated = (0..3).all(|i| {
            let d = tri[i].dot(&tri[(i + 1) % 3]);
            d > -0.95 && d < 0.99
        });
        if !separated {
            continue;
        }
        let excess = solid_angle_spherical_polygon(&tri)?;
        let path = geodesic_polygon(&tri, 700)?;
        let states: Vec<Spinor> = path.into_iter().map(spinor_from_bloch).collect();
        let g = geometric_phase_discrete(&states, true)?;
        worst = worst.max(mod_2pi_distance(g, -0.5 * excess));
        done += 1;
    }
    Ok(vec![Measurement::at_most("max_error_rad", worst, 1e-3)])
}

fn gauge_invariance(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let states = LoopSpec {
        theta: 1.1,
        n_steps: 500,
        orientation: Orientation::Forward,
    }
    .states()?;
    let g0 = geometric_phase_discrete(&states, true)?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let regauged: Vec<Spinor> = states
            .iter()
            .map(|s| s.scale(cis(rng.gen_range(-PI..PI))))
            .collect();
        worst = worst.max(mod_2pi_distance(
            geometric_phase_discrete(&regauged, true)?,
            g0,
        ));
    }
    Ok(vec![Measurement::at_most("max_change_rad", worst, 1e-12)])
}

/// `θ = π/3`, `|Ω′| = 1`.
fn reference_drive() -> Result<RabiParams> {
    RabiParams::new(10.5, FRAC_PI_3.sin(), 10.0, 0.0)
}

fn cone_phase(cfg: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let p = reference_drive()?;
    let timing = if cfg.diabatic {
        LoopTiming::new(DIABATIC_RAMP, DIABATIC_SWEEP)?
    } else {
        LoopTiming::adiabatic(1.0)?
    };
    let opts = RunOptions::default();
    let m = measure_cone_phase(&p, &timing, &opts)?;
    Ok(vec![
        Measurement::at_most("phase_error_rad", m.error(), 5e-3),
        Measurement::at_least("return_fidelity", m.min_fidelity(), opts.min_fidelity),
    ])
}

fn rate_independence(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let p = reference_drive()?;
    let opts = RunOptions::default();
    let short = LoopTiming::adiabatic(1.0)?;
    let long = LoopTiming::new(3.0 * short.ramp_time, 3.0 * short.sweep_time)?;
    let a = measure_cone_phase(&p, &short, &opts)?;
    let b = measure_cone_phase(&p, &long, &opts)?;
    Ok(vec![
        Measurement::at_most(
            "geometric_diff_rad",
            mod_2pi_distance(a.geometric, b.geometric),
            1e-3,
        ),
        Measurement::at_least(
            "dynamic_diff_rad",
            (a.forward.phases.dynamic - b.forward.phases.dynamic).abs(),
            1.0,
        ),
    ])
}

fn spin_echo(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let p = reference_drive()?;
    let opts = RunOptions::default();
    let r = simulate_spin_echo_1q(&p, &LoopTiming::adiabatic(1.0)?, &opts)?;
    Ok(vec![
        Measurement::at_most("difference_error_rad", r.error(), 5e-3),
        Measurement::at_most("dynamic_residual_rad", r.dynamic_residual.abs(), 1e-3),
        Measurement::at_most("cos_form_error_rad", r.cos_form_error(), 5e-3),
        Measurement::at_least("return_fidelity", r.min_fidelity(), opts.min_fidelity),
    ])
}

fn delta_gamma_closed_form(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let (wa, j) = (40.0, 1.0);
    let at_center = delta_gamma(wa, wa, PI * j, j)?;
    let mut worst_even = 0.0f64;
    let mut worst_odd = 0.0f64;
    for _ in 0..50 {
        let d = rng.gen_range(-10.0..10.0);
        let w1 = rng.gen_range(0.1..10.0);
        let jj = rng.gen_range(0.1..3.0);
        worst_even = worst_even
            .max((delta_gamma(wa, wa + d, w1, jj)? - delta_gamma(wa, wa - d, w1, jj)?).abs());
        worst_odd = worst_odd
            .max((delta_gamma(wa, wa + d, w1, jj)? + delta_gamma(wa, wa + d, w1, -jj)?).abs());
    }
    Ok(vec![
        Measurement::at_most("center_error_rad", (at_center - PI * SQRT_2).abs(), 1e-12),
        Measurement::at_most("detuning_parity_rad", worst_even, 1e-12),
        Measurement::at_most("coupling_parity_rad", worst_odd, 1e-12),
    ])
}

fn conditional_gate(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let pj = PI;
    let p = TwoSpinParams {
        omega_a: 40.0,
        omega_b: 10.0,
        j: 1.0,
        omega1: pj,
        omega: 40.0 - 1.5 * pj,
        phi: 0.0,
        drive_on_b: false,
    };
    let opts = RunOptions::default();
    let r = simulate_conditional_sequence(&p, &two_spin_timing(&p)?, &opts)?;
    Ok(vec![
        Measurement::at_least("gate_fidelity", r.fidelity, 0.999),
        Measurement::at_most("leakage", r.leakage, opts.leakage_tolerance),
        Measurement::at_least(
            "controlled_phase_fidelity",
            r.controlled_phase_fidelity,
            0.999,
        ),
    ])
}

fn surface_peak_slope(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let s = fault_tolerance_surface(
        40.0,
        1.0,
        &GridAxis::new(2.0, 2.0, 1)?,
        &GridAxis::new(0.1, 5.0, 100)?,
    )?;
    let peak = s.peaks[0];
    Ok(vec![
        Measurement::at_most("relative_slope", peak.relative_slope, 1e-6),
        Measurement::at_least("interior", if peak.interior { 1.0 } else { 0.0 }, 1.0),
    ])
}

fn gate_network(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let theta = rng.gen_range(-PI..PI);
        let phi = rng.gen_range(-PI..PI);
        let target = CVec([C64::new(theta.cos(), 0.0), cis(phi) * theta.sin()]);
        let fid = target.inner(&prepare_network(theta, phi)).norm_sqr();
        worst = worst.max(1.0 - fid);
    }
    Ok(vec![Measurement::at_most("max_infidelity", worst, 1e-12)])
}

fn local_phase_round_trip(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d: [C64; 4] = std::array::from_fn(|_| cis(rng.gen_range(-PI..PI)));
        let g = Gate2::new(Mat4::from_diag(d))?;
        let back = local_phase_equivalence(&g)?.reconstruct();
        worst = worst.max(back.matrix().max_abs_diff(g.matrix()));
    }
    Ok(vec![Measurement::at_most("max_entry_diff", worst, 1e-12)])
}

fn hadamard_involution(_: &VerifyConfig, _: &mut ChaCha8Rng) -> Result<Vec<Measurement>> {
    let h = hadamard();
    let dev = h.compose(&h).matrix().max_abs_diff(&Mat2::identity());
    Ok(vec![Measurement::at_most("max_entry_diff", dev, 1e-12)])
}

fn controlled_phase_composition(
    _: &VerifyConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Measurement>> {
    let mut worst = controlled_phase(0.0)
        .matrix()
        .max_abs_diff(&Mat4::identity());
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
        let ab = controlled_phase(a).compose(&controlled_phase(b));
        worst = worst.max(ab.matrix().max_abs_diff(controlled_phase(a + b).matrix()));
        worst = worst.max(1.0 - gate_fidelity(ab.matrix(), controlled_phase(a + b).matrix()));
    }
    Ok(vec![Measurement::at_most("max_entry_diff", worst, 1e-12)])
}
