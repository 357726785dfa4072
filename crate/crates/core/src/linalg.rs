//! Fixed-dimension complex linear algebra for one and two spin-half systems.
//!
//! Only dimensions 2 and 4 are used in this crate. Four-dimensional objects
//! use the product basis order `{↑↑, ↑↓, ↓↑, ↓↓}` with spin `a` in the first
//! slot, and `|0⟩ ≡ |↑⟩`, `|1⟩ ≡ |↓⟩`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default absolute elementwise tolerance for matrix equality checks.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `e^{iθ}`.
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Complex column vector of fixed dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CVec<const N: usize>(pub [C64; N]);

pub type Spinor = CVec<2>;
pub type TwoSpinState = CVec<4>;

impl<const N: usize> CVec<N> {
    pub fn zeros() -> Self {
        Self([ZERO; N])
    }

    /// Computational basis vector `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut v = Self::zeros();
        v.0[i] = ONE;
        v
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    #[inline]
    pub fn inner(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for k in 0..N {
            acc += self.0[k].conj() * other.0[k];
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Self {
        self.scale(ONE / self.norm())
    }

    #[inline]
    pub fn scale(&self, c: C64) -> Self {
        let mut out = *self;
        for z in out.0.iter_mut() {
            *z *= c;
        }
        out
    }

    /// `self + c * other`.
    #[inline]
    pub fn axpy(&self, c: C64, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..N {
            out.0[k] += c * other.0[k];
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..N)
            .map(|k| (self.0[k] - other.0[k]).norm())
            .fold(0.0, f64::max)
    }
}

impl<const N: usize> Index<usize> for CVec<N> {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl<const N: usize> IndexMut<usize> for CVec<N> {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl<const N: usize> Add for CVec<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.axpy(ONE, &rhs)
    }
}

impl<const N: usize> Sub for CVec<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.axpy(-ONE, &rhs)
    }
}

/// Complex square matrix of fixed dimension, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = CMat<2>;
pub type Mat4 = CMat<4>;

impl<const N: usize> CMat<N> {
    pub fn zeros() -> Self {
        Self([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for k in 0..N {
            m.0[k][k] = ONE;
        }
        m
    }

    pub fn from_diag(d: [C64; N]) -> Self {
        let mut m = Self::zeros();
        for (k, z) in d.into_iter().enumerate() {
            m.0[k][k] = z;
        }
        m
    }

    pub fn diag(&self) -> [C64; N] {
        std::array::from_fn(|k| self.0[k][k])
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[CVec<N>; N]) -> Self {
        let mut m = Self::zeros();
        for (j, c) in cols.iter().enumerate() {
            for i in 0..N {
                m.0[i][j] = c.0[i];
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> CVec<N> {
        let mut v = CVec::zeros();
        for i in 0..N {
            v.0[i] = self.0[i][j];
        }
        v
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for z in row.iter_mut() {
                *z *= c;
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|k| self.0[k][k]).sum()
    }

    #[inline]
    pub fn apply(&self, v: &CVec<N>) -> CVec<N> {
        let mut out = CVec::zeros();
        for i in 0..N {
            let mut acc = ZERO;
            for j in 0..N {
                acc += self.0[i][j] * v.0[j];
            }
            out.0[i] = acc;
        }
        out
    }

    /// Real part of `⟨ψ|self|ψ⟩`.
    pub fn expectation(&self, psi: &CVec<N>) -> f64 {
        psi.inner(&self.apply(psi)).re
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..N {
            for j in 0..N {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn unitary_deviation(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..N {
            for j in 0..N {
                if i != j {
                    d = d.max(self.0[i][j].norm());
                }
            }
        }
        d
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gershgorin bound on `λ_max − λ_min` for a Hermitian matrix. Exact for
    /// `N = 2`.
    pub fn spectral_spread_bound(&self) -> f64 {
        if N == 2 {
            let a = self.0[0][0].re;
            let d = self.0[1][1].re;
            let b = self.0[0][1].norm();
            return ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        }
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for i in 0..N {
            let r: f64 = (0..N)
                .filter(|&j| j != i)
                .map(|j| self.0[i][j].norm())
                .sum();
            hi = hi.max(self.0[i][i].re + r);
            lo = lo.min(self.0[i][i].re - r);
        }
        hi - lo
    }
}

impl<const N: usize> Index<(usize, usize)> for CMat<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for CMat<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Mul for CMat<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> Mul<CVec<N>> for CMat<N> {
    type Output = CVec<N>;
    fn mul(self, rhs: CVec<N>) -> CVec<N> {
        self.apply(&rhs)
    }
}

impl<const N: usize> Add for CMat<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<const N: usize> AddAssign for CMat<N> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl<const N: usize> Sub for CMat<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-ONE)
    }
}

impl<const N: usize> Neg for CMat<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

/// Real 3-vector: Bloch vectors and Rabi vectors (rad/s where applicable).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit vector at polar angle `theta` from +z and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        Self::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        )
    }

    pub fn dot(&self, o: &Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Vec3 {
        Vec3::new(self.x * c, self.y * c, self.z * c)
    }

    pub fn normalized(&self) -> Vec3 {
        self.scale(1.0 / self.norm())
    }

    pub fn max_abs_diff(&self, o: &Vec3) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self.scale(-1.0)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v.scale(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Standard Pauli matrix.
pub fn pauli(axis: Axis) -> Mat2 {
    match axis {
        Axis::X => CMat([[ZERO, ONE], [ONE, ZERO]]),
        Axis::Y => CMat([[ZERO, -I], [I, ZERO]]),
        Axis::Z => CMat([[ONE, ZERO], [ZERO, -ONE]]),
    }
}

/// `a·σ`.
pub fn sigma_dot(a: Vec3) -> Mat2 {
    CMat([
        [C64::new(a.z, 0.0), C64::new(a.x, -a.y)],
        [C64::new(a.x, a.y), C64::new(-a.z, 0.0)],
    ])
}

/// Kronecker product `a ⊗ b` in the order `{↑↑, ↑↓, ↓↑, ↓↓}`.
pub fn tensor(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// Product state `a ⊗ b`.
pub fn tensor_vec(a: &Spinor, b: &Spinor) -> TwoSpinState {
    let mut v = TwoSpinState::zeros();
    for i in 0..2 {
        for k in 0..2 {
            v.0[2 * i + k] = a.0[i] * b.0[k];
        }
    }
    v
}

/// Decompose a 2×2 Hermitian matrix as `a0·1 + a·σ`.
pub fn pauli_components(h: &Mat2) -> (f64, Vec3) {
    let a0 = 0.5 * (h.0[0][0].re + h.0[1][1].re);
    let a = Vec3::new(
        h.0[1][0].re,
        h.0[1][0].im,
        0.5 * (h.0[0][0].re - h.0[1][1].re),
    );
    (a0, a)
}

/// `exp(−i h t)` for Hermitian `h`.
///
/// Two-dimensional generators use `exp(−i(a·σ)t) = cos|a|t − i sin|a|t (â·σ)`;
/// larger ones use scaling and squaring of a truncated Taylor series.
pub fn expm_hermitian<const N: usize>(h: &CMat<N>, t: f64) -> Result<CMat<N>> {
    let dev = h.hermitian_deviation();
    if dev > DEFAULT_TOL * (1.0 + h.norm_inf()) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    if N == 2 {
        let mut h2 = Mat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                h2.0[i][j] = h.0[i][j];
            }
        }
        let u2 = expm_hermitian_2(&h2, t);
        let mut u = CMat::<N>::zeros();
        for i in 0..2 {
            for j in 0..2 {
                u.0[i][j] = u2.0[i][j];
            }
        }
        return Ok(u);
    }
    Ok(expm_taylor(&h.scale(C64::new(0.0, -t))))
}

fn expm_hermitian_2(h: &Mat2, t: f64) -> Mat2 {
    let (a0, a) = pauli_components(h);
    let r = a.norm();
    let global = cis(-a0 * t);
    let rot = if r == 0.0 {
        Mat2::identity()
    } else {
        let (s, c) = (r * t).sin_cos();
        Mat2::identity().scale(C64::new(c, 0.0))
            + sigma_dot(a.scale(1.0 / r)).scale(C64::new(0.0, -s))
    };
    rot.scale(global)
}

fn expm_taylor<const N: usize>(a: &CMat<N>) -> CMat<N> {
    let norm = a.norm_inf();
    let mut squarings = 0u32;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
    }
    let scaled = a.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut term = CMat::<N>::identity();
    let mut sum = CMat::<N>::identity();
    for k in 1..=18 {
        term = (term * scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}
