use thiserror::Error;

/// Errors raised by the simulator and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H - H†| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max |U†U - 1| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not diagonal (max off-diagonal magnitude {magnitude:.3e})")]
    NotDiagonal { magnitude: f64 },

    #[error("time step must be positive and finite, got {dt}")]
    InvalidStep { dt: f64 },

    #[error("time step {dt} too large for spectral spread {spread:.4e} (dt * spread = {product:.4e} > {limit})")]
    StepTooLarge {
        dt: f64,
        spread: f64,
        product: f64,
        limit: f64,
    },

    #[error("invalid time span [{start}, {end}]")]
    InvalidSpan { start: f64, end: f64 },

    #[error("duration `{name}` must be positive and finite, got {value}")]
    InvalidDuration { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("path too coarse: |<psi_{index}|psi_{next}>| = {overlap:.3e} is below {floor}", next = index + 1)]
    PathTooCoarse {
        index: usize,
        overlap: f64,
        floor: f64,
    },

    #[error("degenerate spherical polygon: {0}")]
    DegeneratePolygon(&'static str),

    #[error("Rabi vector vanishes; its direction is undefined")]
    ZeroRabiVector,

    #[error("energy levels degenerate along the path (gap {gap:.3e} at step {index})")]
    Degenerate { gap: f64, index: usize },

    #[error(
        "adiabaticity violated: fidelity {fidelity:.6} to the expected state is below {threshold}"
    )]
    AdiabaticityViolated { fidelity: f64, threshold: f64 },

    #[error("off-diagonal leakage {magnitude:.3e} exceeds tolerance {tolerance:.1e}")]
    Leakage { magnitude: f64, tolerance: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
