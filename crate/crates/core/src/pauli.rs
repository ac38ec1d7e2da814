//! Exact 2×2 complex matrix algebra in the Pauli basis.
//!
//! The raising/lowering combinations use the unnormalized convention
//! `σ± = σx ± iσy`, so `σ+ = [[0, 2], [0, 0]]` and `σ- = [[0, 0], [2, 0]]`.
//! Every formula downstream (commutators, push-through identities, the
//! factorized propagators) assumes this normalization.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this magnitude of `μ` the exponential uses the series limit of
/// `sinh μ / μ` and `cosh μ`.
const SMALL_MU: f64 = 1e-8;

/// A 2×2 matrix of complex scalars, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex2x2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl Complex2x2 {
    pub const ZERO: Self = Self::new(ZERO, ZERO, ZERO, ZERO);
    pub const IDENTITY: Self = Self::new(ONE, ZERO, ZERO, ONE);

    pub const fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    /// Builds a matrix, rejecting NaN or infinite entries.
    pub fn try_new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Result<Self> {
        let m = Self::new(m11, m12, m21, m22);
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::InvalidParameter(format!("non-finite matrix entry in {m}")))
        }
    }

    /// Matrix with real entries.
    pub fn real(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self::new(m11.into(), m12.into(), m21.into(), m22.into())
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    pub fn scalar(s: Complex64) -> Self {
        Self::diag(s, s)
    }

    pub fn sigma_x() -> Self {
        Self::real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn sigma_y() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    pub fn sigma_z() -> Self {
        Self::real(1.0, 0.0, 0.0, -1.0)
    }

    /// `σ+ = σx + iσy = [[0, 2], [0, 0]]`.
    pub fn sigma_plus() -> Self {
        Self::real(0.0, 2.0, 0.0, 0.0)
    }

    /// `σ- = σx - iσy = [[0, 0], [2, 0]]`.
    pub fn sigma_minus() -> Self {
        Self::real(0.0, 0.0, 2.0, 0.0)
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        Self::new(self.m11.conj(), self.m12.conj(), self.m21.conj(), self.m22.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m11, self.m21, self.m12, self.m22)
    }

    pub fn adjoint(&self) -> Self {
        self.conj().transpose()
    }

    /// Inverse, or `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == ZERO {
            return None;
        }
        let inv = det.inv();
        Some(Self::new(self.m22 * inv, -self.m12 * inv, -self.m21 * inv, self.m11 * inv))
    }

    /// Chebyshev (max-entry modulus) norm.
    pub fn max_norm(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance between two matrices.
    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).max_norm()
    }

    /// Entrywise equality within `tol` in modulus.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }

    /// The two eigenvalues `n ± sqrt(z² + m12·m21)`, `+` branch first, with the
    /// principal complex square root.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let half_trace = self.trace() * 0.5;
        let half_diff = (self.m11 - self.m22) * 0.5;
        let root = (half_diff * half_diff + self.m12 * self.m21).sqrt();
        (half_trace + root, half_trace - root)
    }
}

impl Add for Complex2x2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.m11 + o.m11, self.m12 + o.m12, self.m21 + o.m21, self.m22 + o.m22)
    }
}

impl AddAssign for Complex2x2 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Complex2x2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }
}

impl Neg for Complex2x2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.m11, -self.m12, -self.m21, -self.m22)
    }
}

impl Mul for Complex2x2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

impl MulAssign for Complex2x2 {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl Mul<Complex64> for Complex2x2 {
    type Output = Self;
    fn mul(self, s: Complex64) -> Self {
        self.scale(s)
    }
}

impl Mul<f64> for Complex2x2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale_re(s)
    }
}

impl fmt::Display for Complex2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.m11, self.m12, self.m21, self.m22)
    }
}

/// Coefficients of `n·I + x·σx + y·σy + z·σz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliCoefficients {
    pub n: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl PauliCoefficients {
    pub const fn new(n: Complex64, x: Complex64, y: Complex64, z: Complex64) -> Self {
        Self { n, x, y, z }
    }

    /// `x² + y² + z²` (no conjugation).
    pub fn vector_square(&self) -> Complex64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }
}

pub fn pauli_compose(c: PauliCoefficients) -> Complex2x2 {
    Complex2x2::new(c.n + c.z, c.x - I * c.y, c.x + I * c.y, c.n - c.z)
}

pub fn pauli_decompose(m: &Complex2x2) -> PauliCoefficients {
    PauliCoefficients {
        n: (m.m11 + m.m22) * 0.5,
        x: (m.m12 + m.m21) * 0.5,
        y: I * (m.m12 - m.m21) * 0.5,
        z: (m.m11 - m.m22) * 0.5,
    }
}

/// `ab - ba`.
pub fn commutator(a: &Complex2x2, b: &Complex2x2) -> Complex2x2 {
    *a * *b - *b * *a
}

/// Closed-form matrix exponential.
///
/// With `m = n·I + v·σ` and `μ² = v·v`, `exp(m) = eⁿ (cosh μ · I + (sinh μ / μ) v·σ)`.
/// Both `cosh μ` and `sinh μ / μ` are even in `μ`, so the square-root branch
/// does not matter.
pub fn exp2(m: &Complex2x2) -> Complex2x2 {
    let c = pauli_decompose(m);
    let mu2 = c.vector_square();
    let mu = mu2.sqrt();
    let (ch, sh_over_mu) = if mu.norm() < SMALL_MU {
        (ONE + mu2 * 0.5, ONE + mu2 / 6.0)
    } else {
        (mu.cosh(), mu.sinh() / mu)
    };
    let scale = c.n.exp();
    let traceless = pauli_compose(PauliCoefficients::new(ZERO, c.x, c.y, c.z));
    (Complex2x2::scalar(ch) + traceless.scale(sh_over_mu)).scale(scale)
}

/// `exp(a) · b · exp(-a)`.
pub fn conjugate_by_exp(a: &Complex2x2, b: &Complex2x2) -> Complex2x2 {
    exp2(a) * *b * exp2(&-*a)
}
