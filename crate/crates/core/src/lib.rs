//! Geometric-phase simulation and verification for one and two spin-½ systems.
//!
//! Units: `ħ = 1`, angular frequencies in rad/s, times in s, the scalar
//! coupling `J` in Hz (it enters the Hamiltonian as `πJ`).

pub mod bloch;
pub mod cli;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod phase;
pub mod schedule;
pub mod schrodinger;
pub mod sequences;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
