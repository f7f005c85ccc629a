//! Pauli and Dirac matrices, 2- and 4-spinors.
//!
//! All values are immutable `Copy` types. Matrix indices in the public API
//! are 1-based (`pauli(1..=3)`, `dirac_alpha(1..=3)`); storage is row-major.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DtlError, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A point or direction in ℝ³.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct RealVec3(pub [f64; 3]);

impl RealVec3 {
    pub const ZERO: RealVec3 = RealVec3([0.0; 3]);

    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        RealVec3([x1, x2, x3])
    }

    pub fn dot(self, o: RealVec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(self, o: RealVec3) -> RealVec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        RealVec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Japanese bracket `⟨x⟩ = sqrt(1 + |x|²)`.
    pub fn bracket(self) -> f64 {
        (1.0 + self.norm_sqr()).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn normalized(self) -> RealVec3 {
        let n = self.norm();
        self * (1.0 / n)
    }
}

impl Add for RealVec3 {
    type Output = RealVec3;
    fn add(self, o: RealVec3) -> RealVec3 {
        RealVec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for RealVec3 {
    type Output = RealVec3;
    fn sub(self, o: RealVec3) -> RealVec3 {
        RealVec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for RealVec3 {
    type Output = RealVec3;
    fn mul(self, s: f64) -> RealVec3 {
        RealVec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Neg for RealVec3 {
    type Output = RealVec3;
    fn neg(self) -> RealVec3 {
        self * -1.0
    }
}

/// Element of ℂ².
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinorC2 {
    pub c0: C64,
    pub c1: C64,
}

impl SpinorC2 {
    pub const ZERO: SpinorC2 = SpinorC2 { c0: ZERO, c1: ZERO };

    pub const fn new(c0: C64, c1: C64) -> Self {
        SpinorC2 { c0, c1 }
    }

    pub fn real(a: f64, b: f64) -> Self {
        SpinorC2::new(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `(self, other)`, antilinear in `self`.
    pub fn inner(&self, other: &SpinorC2) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    pub fn scale(&self, s: C64) -> SpinorC2 {
        SpinorC2::new(self.c0 * s, self.c1 * s)
    }

    pub fn is_finite(&self) -> bool {
        self.c0.is_finite() && self.c1.is_finite()
    }

    pub fn to_array(self) -> [C64; 2] {
        [self.c0, self.c1]
    }
}

impl Add for SpinorC2 {
    type Output = SpinorC2;
    fn add(self, o: SpinorC2) -> SpinorC2 {
        SpinorC2::new(self.c0 + o.c0, self.c1 + o.c1)
    }
}

impl Sub for SpinorC2 {
    type Output = SpinorC2;
    fn sub(self, o: SpinorC2) -> SpinorC2 {
        SpinorC2::new(self.c0 - o.c0, self.c1 - o.c1)
    }
}

impl Mul<f64> for SpinorC2 {
    type Output = SpinorC2;
    fn mul(self, s: f64) -> SpinorC2 {
        SpinorC2::new(self.c0 * s, self.c1 * s)
    }
}

/// Element of ℂ⁴ split into its upper and lower 2-spinor blocks.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinorC4 {
    pub upper: SpinorC2,
    pub lower: SpinorC2,
}

impl SpinorC4 {
    pub const ZERO: SpinorC4 = SpinorC4 {
        upper: SpinorC2::ZERO,
        lower: SpinorC2::ZERO,
    };

    pub const fn new(upper: SpinorC2, lower: SpinorC2) -> Self {
        SpinorC4 { upper, lower }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.upper.norm_sqr() + self.lower.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn to_array(self) -> [C64; 4] {
        [self.upper.c0, self.upper.c1, self.lower.c0, self.lower.c1]
    }

    pub fn from_array(a: [C64; 4]) -> Self {
        SpinorC4::new(SpinorC2::new(a[0], a[1]), SpinorC2::new(a[2], a[3]))
    }
}

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix2c(pub [[C64; 2]; 2]);

impl Matrix2c {
    pub const ZERO: Matrix2c = Matrix2c([[ZERO; 2]; 2]);
    pub const IDENTITY: Matrix2c = Matrix2c([[ONE, ZERO], [ZERO, ONE]]);

    pub fn scale(&self, s: C64) -> Matrix2c {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|z| *z *= s);
        Matrix2c(m)
    }

    pub fn adjoint(&self) -> Matrix2c {
        let a = &self.0;
        Matrix2c([
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, v: &SpinorC2) -> SpinorC2 {
        let a = &self.0;
        SpinorC2::new(
            a[0][0] * v.c0 + a[0][1] * v.c1,
            a[1][0] * v.c0 + a[1][1] * v.c1,
        )
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix2c) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }
}

impl Mul for Matrix2c {
    type Output = Matrix2c;
    fn mul(self, o: Matrix2c) -> Matrix2c {
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.0[r][0] * o.0[0][c] + self.0[r][1] * o.0[1][c];
            }
        }
        Matrix2c(m)
    }
}

impl Add for Matrix2c {
    type Output = Matrix2c;
    fn add(self, o: Matrix2c) -> Matrix2c {
        let mut m = self.0;
        m.iter_mut()
            .flatten()
            .zip(o.0.iter().flatten())
            .for_each(|(a, b)| *a += b);
        Matrix2c(m)
    }
}

impl Sub for Matrix2c {
    type Output = Matrix2c;
    fn sub(self, o: Matrix2c) -> Matrix2c {
        self + o.scale(-ONE)
    }
}

/// Row-major 4×4 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix4c(pub [[C64; 4]; 4]);

impl Matrix4c {
    pub const ZERO: Matrix4c = Matrix4c([[ZERO; 4]; 4]);

    pub fn identity() -> Matrix4c {
        let mut m = [[ZERO; 4]; 4];
        (0..4).for_each(|i| m[i][i] = ONE);
        Matrix4c(m)
    }

    /// Assemble from 2×2 blocks `[[ul, ur], [ll, lr]]`.
    pub fn from_blocks(ul: Matrix2c, ur: Matrix2c, ll: Matrix2c, lr: Matrix2c) -> Matrix4c {
        let mut m = [[ZERO; 4]; 4];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = ul.0[r][c];
                m[r][c + 2] = ur.0[r][c];
                m[r + 2][c] = ll.0[r][c];
                m[r + 2][c + 2] = lr.0[r][c];
            }
        }
        Matrix4c(m)
    }

    /// 2×2 block at block-row `br`, block-column `bc` (each 0 or 1).
    pub fn block(&self, br: usize, bc: usize) -> Matrix2c {
        let mut b = [[ZERO; 2]; 2];
        for (r, row) in b.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.0[2 * br + r][2 * bc + c];
            }
        }
        Matrix2c(b)
    }

    pub fn scale(&self, s: C64) -> Matrix4c {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|z| *z *= s);
        Matrix4c(m)
    }

    pub fn adjoint(&self) -> Matrix4c {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = self.0[c][r].conj();
            }
        }
        Matrix4c(m)
    }

    pub fn apply(&self, v: &SpinorC4) -> SpinorC4 {
        let x = v.to_array();
        let mut y = [ZERO; 4];
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = (0..4).map(|c| self.0[r][c] * x[c]).sum();
        }
        SpinorC4::from_array(y)
    }

    pub fn max_abs_diff(&self, other: &Matrix4c) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }
}

impl Mul for Matrix4c {
    type Output = Matrix4c;
    fn mul(self, o: Matrix4c) -> Matrix4c {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = (0..4).map(|k| self.0[r][k] * o.0[k][c]).sum();
            }
        }
        Matrix4c(m)
    }
}

impl Add for Matrix4c {
    type Output = Matrix4c;
    fn add(self, o: Matrix4c) -> Matrix4c {
        let mut m = self.0;
        m.iter_mut()
            .flatten()
            .zip(o.0.iter().flatten())
            .for_each(|(a, b)| *a += b);
        Matrix4c(m)
    }
}

fn check_index(j: usize) -> Result<()> {
    if (1..=3).contains(&j) {
        Ok(())
    } else {
        Err(DtlError::IndexOutOfRange(j))
    }
}

/// Pauli matrix `σ_j`, `j ∈ {1, 2, 3}`.
pub fn pauli(j: usize) -> Result<Matrix2c> {
    check_index(j)?;
    Ok(PAULI[j - 1])
}

pub(crate) const PAULI: [Matrix2c; 3] = [
    Matrix2c([[ZERO, ONE], [ONE, ZERO]]),
    Matrix2c([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]]),
    Matrix2c([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]]),
];

/// `σ·v = Σ_j v_j σ_j`.
pub fn sigma_dot(v: RealVec3) -> Matrix2c {
    let [a, b, c] = v.0;
    Matrix2c([
        [C64::new(c, 0.0), C64::new(a, -b)],
        [C64::new(a, b), C64::new(-c, 0.0)],
    ])
}

/// `(σ·v) s` without forming the matrix.
#[inline]
pub fn sigma_dot_apply(v: [f64; 3], s: [C64; 2]) -> [C64; 2] {
    let [a, b, c] = v;
    let ab_minus = C64::new(a, -b);
    let ab_plus = C64::new(a, b);
    [s[0] * c + ab_minus * s[1], ab_plus * s[0] - s[1] * c]
}

/// Dirac matrix `α_j = (0 σ_j; σ_j 0)`.
pub fn dirac_alpha(j: usize) -> Result<Matrix4c> {
    let s = pauli(j)?;
    Ok(Matrix4c::from_blocks(Matrix2c::ZERO, s, s, Matrix2c::ZERO))
}

/// `β = diag(I₂, −I₂)`.
pub fn dirac_beta() -> Matrix4c {
    Matrix4c::from_blocks(
        Matrix2c::IDENTITY,
        Matrix2c::ZERO,
        Matrix2c::ZERO,
        Matrix2c::IDENTITY.scale(-ONE),
    )
}

/// `w = (⟨φ,σ₁φ⟩, ⟨φ,σ₂φ⟩, ⟨φ,σ₃φ⟩)`, real for every φ. No normalization
/// is applied.
pub fn spin_density(phi: &SpinorC2) -> RealVec3 {
    let [a, b] = [phi.c0, phi.c1];
    let ab = a.conj() * b;
    RealVec3([2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()])
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sigma1_matches_display() {
        let s1 = pauli(1).unwrap();
        assert_eq!(s1.0, [[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]]);
    }

    #[test]
    fn pauli_squares_to_identity_and_is_traceless() {
        for j in 1..=3 {
            let s = pauli(j).unwrap();
            assert!((s * s).max_abs_diff(&Matrix2c::IDENTITY) < TOL);
            assert!(s.trace().norm() < TOL);
            assert!(s.is_hermitian(TOL));
            assert!((s * s.adjoint()).max_abs_diff(&Matrix2c::IDENTITY) < TOL);
        }
    }

    #[test]
    fn commutator_s1_s2() {
        let (s1, s2, s3) = (pauli(1).unwrap(), pauli(2).unwrap(), pauli(3).unwrap());
        let comm = s1 * s2 - s2 * s1;
        assert!(comm.max_abs_diff(&s3.scale(c(0., 2.))) < TOL);
    }

    #[test]
    fn bad_indices_rejected() {
        assert!(matches!(pauli(0), Err(DtlError::IndexOutOfRange(0))));
        assert!(pauli(4).is_err());
        assert!(dirac_alpha(0).is_err());
    }

    #[test]
    fn sigma_dot_examples() {
        assert!(sigma_dot(RealVec3::new(0., 0., 1.)).max_abs_diff(&pauli(3).unwrap()) < TOL);
        let s = sigma_dot(RealVec3::new(1., 1., 1.));
        assert!((s * s).max_abs_diff(&Matrix2c::IDENTITY.scale(c(3., 0.))) < TOL);
        assert_eq!(sigma_dot(RealVec3::ZERO), Matrix2c::ZERO);
    }

    #[test]
    fn sigma_dot_apply_matches_matrix() {
        let v = RealVec3::new(0.3, -1.2, 2.5);
        let s = SpinorC2::new(c(0.1, 0.7), c(-0.4, 0.2));
        let m = sigma_dot(v).apply(&s);
        let f = sigma_dot_apply(v.0, s.to_array());
        assert!((m.c0 - f[0]).norm() < TOL && (m.c1 - f[1]).norm() < TOL);
    }

    #[test]
    fn dirac_examples() {
        let b = dirac_beta();
        assert!((b * b).max_abs_diff(&Matrix4c::identity()) < TOL);
        let a1 = dirac_alpha(1).unwrap();
        assert!((a1 * b + b * a1).max_abs_diff(&Matrix4c::ZERO) < TOL);
        let a2 = dirac_alpha(2).unwrap();
        assert_eq!(a2.block(0, 1), pauli(2).unwrap());
        assert_eq!(a2.block(1, 0), pauli(2).unwrap());
        assert_eq!(a2.block(0, 0), Matrix2c::ZERO);
    }

    #[test]
    fn spin_density_matches_inner_products() {
        let phi = SpinorC2::new(c(0.6, 0.1), c(-0.2, 0.5));
        let w = spin_density(&phi);
        for j in 1..=3 {
            let v = phi.inner(&pauli(j).unwrap().apply(&phi));
            assert!(v.im.abs() < TOL);
            assert!((v.re - w.0[j - 1]).abs() < TOL);
        }
    }
}
