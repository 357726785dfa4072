//! `Δγ` over a (detuning, drive amplitude) grid in units of `πJ`, with the
//! per-row maximum over `ω₁` and the slope there.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sequences::{delta_gamma, delta_gamma_domega1};

pub const CSV_HEADER: &str = "detuning_over_piJ,omega1_over_piJ,delta_gamma_rad";

/// Evenly spaced axis `min, …, max` with `count` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let a = Self { min, max, count };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter(
                "grid axis needs at least one point".into(),
            ));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::InvalidParameter(format!(
                "bad grid range [{}, {}]",
                self.min, self.max
            )));
        }
        if self.count == 1 && self.min != self.max {
            return Err(Error::InvalidParameter(
                "a single-point axis needs min == max".into(),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.max
                } else {
                    self.min + step * k as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub detuning_over_pij: f64,
    pub omega1_over_pij: f64,
    pub delta_gamma: f64,
}

/// Maximum of `Δγ` over `ω₁` along one detuning row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowPeak {
    pub detuning_over_pij: f64,
    /// Refined location (not restricted to grid points).
    pub omega1_over_pij: f64,
    pub delta_gamma: f64,
    /// Central difference `∂Δγ/∂(ω₁/πJ)` at the peak.
    pub slope: f64,
    /// `|slope| / |Δγ_peak|`.
    pub relative_slope: f64,
    /// Whether `∂Δγ/∂ω₁` changes sign inside the axis range; otherwise the
    /// maximum sits on an end point.
    pub interior: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaultToleranceSurface {
    pub omega_a: f64,
    pub j: f64,
    pub detuning: Vec<f64>,
    pub omega1: Vec<f64>,
    /// Row-major over detuning, then `ω₁`.
    pub points: Vec<SurfacePoint>,
    pub peaks: Vec<RowPeak>,
}

/// Relative step of the central difference, in units of `πJ`.
pub const SLOPE_STEP: f64 = 1e-5;

struct Row {
    omega_a: f64,
    j: f64,
    x: f64,
}

impl Row {
    fn value(&self, y: f64) -> Result<f64> {
        let pj = PI * self.j;
        delta_gamma(self.omega_a, self.omega_a - self.x * pj, y * pj, self.j)
    }

    fn derivative(&self, y: f64) -> Result<f64> {
        let pj = PI * self.j;
        delta_gamma_domega1(self.omega_a, self.omega_a - self.x * pj, y * pj, self.j)
    }

    /// Bisection on the closed-form derivative, `d(lo) > 0 > d(hi)`.
    fn bisect(&self, mut lo: f64, mut hi: f64) -> Result<f64> {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.derivative(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn peak(&self, ys: &[f64], values: &[f64]) -> Result<RowPeak> {
        let k = values
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
        let n = ys.len();
        let lo = ys[k.saturating_sub(1)];
        let hi = ys[(k + 1).min(n - 1)];
        let (mut y, mut interior) = (ys[k], false);
        // the maximum lies in [lo, hi]; look for a sign change on either side
        for (a, b) in [(lo, ys[k]), (ys[k], hi)] {
            if b > a && self.derivative(a)? > 0.0 && self.derivative(b)? <= 0.0 {
                y = self.bisect(a, b)?;
                interior = true;
                break;
            }
        }
        let peak = self.value(y)?;
        let h = SLOPE_STEP * y.max(1.0);
        let slope = (self.value(y + h)? - self.value(y - h)?) / (2.0 * h);
        Ok(RowPeak {
            detuning_over_pij: self.x,
            omega1_over_pij: y,
            delta_gamma: peak,
            slope,
            relative_slope: if peak != 0.0 {
                slope.abs() / peak.abs()
            } else {
                f64::INFINITY
            },
            interior,
        })
    }
}

/// Evaluate `Δγ` on the grid (axes in units of `πJ`), rows in parallel.
pub fn fault_tolerance_surface(
    omega_a: f64,
    j: f64,
    detuning: &GridAxis,
    omega1: &GridAxis,
) -> Result<FaultToleranceSurface> {
    detuning.validate()?;
    omega1.validate()?;
    if !(omega_a.is_finite() && j.is_finite() && j > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "surface needs finite omega_a and J > 0, got {omega_a}, {j}"
        )));
    }
    if omega1.min <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "omega1 axis must be positive, got min {}",
            omega1.min
        )));
    }
    let xs = detuning.values();
    let ys = omega1.values();
    let rows: Vec<(Vec<SurfacePoint>, RowPeak)> = xs
        .par_iter()
        .map(|&x| {
            let row = Row { omega_a, j, x };
            let values: Vec<f64> = ys.iter().map(|&y| row.value(y)).collect::<Result<_>>()?;
            let peak = row.peak(&ys, &values)?;
            let points = ys
                .iter()
                .zip(&values)
                .map(|(&y, &v)| SurfacePoint {
                    detuning_over_pij: x,
                    omega1_over_pij: y,
                    delta_gamma: v,
                })
                .collect();
            Ok((points, peak))
        })
        .collect::<Result<_>>()?;
    let (points, peaks): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(FaultToleranceSurface {
        omega_a,
        j,
        detuning: xs,
        omega1: ys,
        points: points.into_iter().flatten().collect(),
        peaks,
    })
}

impl FaultToleranceSurface {
    /// CSV with 12 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for p in &self.points {
            writeln!(
                w,
                "{:.11e},{:.11e},{:.11e}",
                p.detuning_over_pij, p.omega1_over_pij, p.delta_gamma
            )?;
        }
        Ok(())
    }
}
