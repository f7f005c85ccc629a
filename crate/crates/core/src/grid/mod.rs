//! Fourier-spectral discretization on the periodic cube `[-L, L)³`.
//!
//! Spinor fields are stored component-planar (`data[c·n³ + idx]`, with
//! `idx = i + n·(j + n·k)` and `i` the x index). Derivatives of spinor
//! fields use the full dual lattice `k ∈ (π/L)·{−n/2, …, n/2−1}³`; the
//! Nyquist row is kept because complex fields need no Hermitian-symmetric
//! spectrum. Derivatives of real scalar and vector fields (divergence,
//! gradient, curl) drop the Nyquist row so their output stays real.

mod field;
mod gauge;
mod operator;

pub use field::{Field, Rank};
pub use gauge::{
    curl_spectral, div_spectral, gauge_transform, gauged_mode, ScalarFieldHandle, VectorField,
};
pub use operator::{
    residual_norm, sample_potential, susy_square_check, LinearOp, OperatorHandle, OperatorKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{DtlError, Result};
use crate::RealVec3;

/// Periodic cubic grid with `n` points per axis on `[-L, L)³`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3D {
    n: usize,
    half_width: f64,
}

impl Grid3D {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(DtlError::Config(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(DtlError::Config(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        Ok(Grid3D { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `h = 2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Number of nodes, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h³` of the discrete L² inner product.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Physical position `−L + h·(i, j, k)` of node `idx`.
    pub fn node(&self, idx: usize) -> RealVec3 {
        let (i, j, k) = self.coords(idx);
        let h = self.spacing();
        let l = self.half_width;
        RealVec3::new(-l + h * i as f64, -l + h * j as f64, -l + h * k as f64)
    }

    /// Signed lattice index of FFT bin `m`: `0..n/2−1` then `−n/2..−1`.
    pub fn signed_mode(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Wavenumber `(π/L)·signed_mode(m)` used for spinor derivatives.
    pub fn wavenumber(&self, m: usize) -> f64 {
        std::f64::consts::PI / self.half_width * self.signed_mode(m) as f64
    }

    /// Wavenumber with the Nyquist bin zeroed, used for real-field derivatives.
    pub fn real_wavenumber(&self, m: usize) -> f64 {
        if m == self.n / 2 {
            0.0
        } else {
            self.wavenumber(m)
        }
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.wavenumber(m)).collect()
    }

    pub fn real_wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.real_wavenumber(m)).collect()
    }

    /// Whether `x` lies in the closed box `[-L, L]³`.
    pub fn contains(&self, x: RealVec3) -> bool {
        let tol = 1e-12 * self.half_width;
        x.0.iter().all(|v| v.abs() <= self.half_width + tol)
    }

    /// Trilinear, periodically wrapped interpolation of a real nodal field.
    pub fn interpolate(&self, values: &[f64], x: RealVec3) -> Result<f64> {
        if values.len() != self.len() {
            return Err(DtlError::GridMismatch(format!(
                "field has {} values, grid has {}",
                values.len(),
                self.len()
            )));
        }
        if !self.contains(x) {
            return Err(DtlError::Domain(format!(
                "{:?} outside [-{l}, {l}]^3",
                x.0,
                l = self.half_width
            )));
        }
        let h = self.spacing();
        let n = self.n;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = ((x.0[a] + self.half_width) / h).max(0.0);
            let fl = s.floor();
            let mut b = fl as usize;
            let mut t = s - fl;
            if b >= n {
                b = n - 1;
                t = 1.0;
            }
            base[a] = b;
            frac[a] = t;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut ijk = [0usize; 3];
            for a in 0..3 {
                let up = (corner >> a) & 1 == 1;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
                ijk[a] = (base[a] + up as usize) % n;
            }
            if w != 0.0 {
                acc += w * values[self.index(ijk[0], ijk[1], ijk[2])];
            }
        }
        Ok(acc)
    }

    pub(crate) fn check_same(&self, other: &Grid3D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(DtlError::GridMismatch(format!(
                "n={} L={} vs n={} L={}",
                self.n, self.half_width, other.n, other.half_width
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid3D::new(4, 1.0).is_err());
        assert!(Grid3D::new(24, 1.0).is_err());
        assert!(Grid3D::new(16, 0.0).is_err());
        assert!(Grid3D::new(16, 2.0).is_ok());
    }

    #[test]
    fn nodes_and_modes() {
        let g = Grid3D::new(8, 2.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.node(0), RealVec3::new(-2.0, -2.0, -2.0));
        let idx = g.index(4, 4, 4);
        assert_eq!(g.node(idx), RealVec3::ZERO);
        assert_eq!(g.coords(idx), (4, 4, 4));
        assert_eq!(g.signed_mode(3), 3);
        assert_eq!(g.signed_mode(4), -4);
        assert_eq!(g.signed_mode(7), -1);
        assert_eq!(g.real_wavenumber(4), 0.0);
        assert!((g.wavenumber(4) + 4.0 * std::f64::consts::PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_linear_between() {
        let g = Grid3D::new(8, 2.0).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|i| g.node(i).0[0]).collect();
        assert!(
            (g.interpolate(&v, g.node(g.index(3, 1, 6))).unwrap() - g.node(g.index(3, 1, 6)).0[0])
                .abs()
                < 1e-14
        );
        let x = RealVec3::new(0.3, -1.1, 0.7);
        assert!((g.interpolate(&v, x).unwrap() - 0.3).abs() < 1e-14);
        assert!(g.interpolate(&v, RealVec3::new(2.5, 0.0, 0.0)).is_err());
    }
}
