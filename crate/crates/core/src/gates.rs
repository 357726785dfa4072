//! Gate layer: Hadamard, phase shift, controlled phase `B(φ)`, the
//! single-qubit preparation network, and comparison up to a global phase.
//!
//! Basis conventions: `|0⟩ ≡ |↑⟩`, `|1⟩ ≡ |↓⟩`; two-qubit gates act on
//! `{00, 01, 10, 11}` with qubit `a` first.
//!
//! Hadamard plus all `B(φ)` form a universal set (any n-qubit unitary takes
//! fewer than `C·4ⁿ·n` of them); that bound is not computed here.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, Mat2, Mat4, Spinor, C64, DEFAULT_TOL, ONE};

/// Unitary matrix acting on one (N = 2) or two (N = 4) qubits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate<const N: usize>(CMat<N>);

pub type Gate1 = Gate<2>;
pub type Gate2 = Gate<4>;

impl<const N: usize> Gate<N> {
    /// Wrap `u`, checking unitarity within [`DEFAULT_TOL`].
    pub fn new(u: CMat<N>) -> Result<Self> {
        Self::with_tolerance(u, DEFAULT_TOL)
    }

    pub fn with_tolerance(u: CMat<N>, tol: f64) -> Result<Self> {
        let deviation = u.unitary_deviation();
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self(u))
    }

    pub fn identity() -> Self {
        Self(CMat::identity())
    }

    pub fn matrix(&self) -> &CMat<N> {
        &self.0
    }

    pub fn apply(&self, v: &CVec<N>) -> CVec<N> {
        self.0.apply(v)
    }

    /// Matrix product `self · other` (`other` acts first).
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }
}

/// Hadamard gate.
pub fn hadamard() -> Gate1 {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Gate(CMat([[h, h], [h, -h]]))
}

/// Phase shift `diag(1, e^{iφ})`.
pub fn phase_gate(phi: f64) -> Gate1 {
    Gate(Mat2::from_diag([ONE, cis(phi)]))
}

/// Controlled phase `B(φ) = diag(1, 1, 1, e^{iφ})`.
pub fn controlled_phase(phi: f64) -> Gate2 {
    Gate(Mat4::from_diag([ONE, ONE, ONE, cis(phi)]))
}

/// `H`, phase `2θ`, `H`, phase `π/2 + φ` applied to `|0⟩`; equals
/// `cos θ|0⟩ + e^{iφ} sin θ|1⟩` up to a global phase.
pub fn prepare_network(theta: f64, phi: f64) -> Spinor {
    let h = hadamard();
    let chain = [
        h,
        phase_gate(2.0 * theta),
        h,
        phase_gate(std::f64::consts::FRAC_PI_2 + phi),
    ];
    chain.iter().fold(Spinor::basis(0), |psi, g| g.apply(&psi))
}

/// Outcome of [`equal_up_to_global_phase`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEquivalence {
    pub equal: bool,
    /// `|tr(a†b)| / N`.
    pub fidelity: f64,
}

/// Compare two gates ignoring a global phase.
pub fn equal_up_to_global_phase<const N: usize>(
    a: &Gate<N>,
    b: &Gate<N>,
    tol: f64,
) -> PhaseEquivalence {
    let fidelity = gate_fidelity(a.matrix(), b.matrix());
    PhaseEquivalence {
        equal: fidelity >= 1.0 - tol,
        fidelity,
    }
}

/// `|tr(a†b)| / N` for arbitrary (not necessarily unitary) matrices.
pub fn gate_fidelity<const N: usize>(a: &CMat<N>, b: &CMat<N>) -> f64 {
    (a.adjoint() * *b).trace().norm() / N as f64
}

/// Decomposition `g = e^{iχ}·(P(φ_a) ⊗ P(φ_b))·B(φ_B)` of a diagonal
/// two-qubit unitary, where `P(φ) = diag(1, e^{iφ})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalPhaseDecomposition {
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_controlled: f64,
    pub global: f64,
}

impl LocalPhaseDecomposition {
    pub fn reconstruct(&self) -> Gate2 {
        let local = crate::linalg::tensor(
            phase_gate(self.phi_a).matrix(),
            phase_gate(self.phi_b).matrix(),
        );
        let g = local * *controlled_phase(self.phi_controlled).matrix();
        Gate(g.scale(cis(self.global)))
    }
}

/// Split a diagonal two-qubit gate into global, local z-phase and
/// controlled-phase parts; `φ_B = χ₀₀ − χ₀₁ − χ₁₀ + χ₁₁`.
pub fn local_phase_equivalence(g: &Gate2) -> Result<LocalPhaseDecomposition> {
    let m = g.matrix();
    let off = m.max_off_diagonal();
    if off > DEFAULT_TOL {
        return Err(Error::NotDiagonal { magnitude: off });
    }
    let d = m.diag();
    let chi: Vec<f64> = d.iter().map(|z| z.arg()).collect();
    Ok(LocalPhaseDecomposition {
        global: chi[0],
        phi_b: chi[1] - chi[0],
        phi_a: chi[2] - chi[0],
        phi_controlled: chi[0] - chi[1] - chi[2] + chi[3],
    })
}
