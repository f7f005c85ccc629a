use serde::{Deserialize, Serialize};

use crate::error::{DtlError, Result};
use crate::grid::{residual_norm, Field, Grid3D, OperatorHandle};
use crate::potentials::PotentialSpec;
use crate::{RealVec3, SpinorC2, SpinorC4, C64};

/// Approximate eigenfunction `f = (aψ, bψ)` of `H_A` at `λ₀ ∈ σ(H_A)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeylQuasimode {
    pub lambda0: f64,
    pub mass: f64,
    pub nu0: f64,
    pub a: f64,
    pub b: f64,
    /// Lattice wave vector of the plane wave and its length.
    pub k: [f64; 3],
    pub k_norm: f64,
    pub n_index: usize,
    /// Width of the Gaussian envelope, absent for `A ≡ 0`.
    pub envelope_width: Option<f64>,
    /// `|M(a, b) − λ₀(a, b)|` for `M = [[m, ν₀], [ν₀, −m]]`.
    pub eigen_relation_error: f64,
    pub residual: f64,
    #[serde(skip)]
    pub field: Option<Field>,
}

/// Unit `(a, b)` with `[[m, ν₀], [ν₀, −m]](a, b) = λ₀ (a, b)`.
pub fn weyl_coefficients(lambda0: f64, mass: f64) -> Result<(f64, f64, f64)> {
    if !(lambda0.abs() >= mass) || !(mass >= 0.0) {
        return Err(DtlError::Domain(format!(
            "|lambda0| = {} is below the mass {mass}",
            lambda0.abs()
        )));
    }
    let nu0 = (lambda0 * lambda0 - mass * mass).max(0.0).sqrt();
    let v1 = (nu0, lambda0 - mass);
    let v2 = (lambda0 + mass, nu0);
    let n1 = v1.0.hypot(v1.1);
    let n2 = v2.0.hypot(v2.1);
    let (a, b) = if n1 >= n2 {
        (v1.0 / n1, v1.1 / n1)
    } else {
        (v2.0 / n2, v2.1 / n2)
    };
    Ok((nu0, a, b))
}

/// Eigenvector of `σ·k` for `+|k|`; `(1, 0)` at `k = 0`.
fn positive_helicity(k: [f64; 3]) -> SpinorC2 {
    let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    if kn == 0.0 {
        return SpinorC2::real(1.0, 0.0);
    }
    let s = if k[2] >= 0.0 {
        SpinorC2::new(C64::new(kn + k[2], 0.0), C64::new(k[0], k[1]))
    } else {
        SpinorC2::new(C64::new(k[0], -k[1]), C64::new(kn - k[2], 0.0))
    };
    s * (1.0 / s.norm())
}

/// Non-Nyquist lattice vector whose length is nearest `nu0`; ties go to the
/// first in `(i, j, l)` lexicographic order over `−n/2+1 ..= n/2−1`.
fn nearest_lattice_vector(grid: &Grid3D, nu0: f64) -> [f64; 3] {
    let h = (grid.n() / 2) as i64 - 1;
    let k1 = std::f64::consts::PI / grid.half_width();
    let mut best = ([0i64; 3], f64::INFINITY);
    for i in -h..=h {
        for j in -h..=h {
            for l in -h..=h {
                let kn = k1 * ((i * i + j * j + l * l) as f64).sqrt();
                let d = (kn - nu0).abs();
                if d < best.1 - 1e-14 {
                    best = ([i, j, l], d);
                }
            }
        }
    }
    best.0.map(|v| v as f64 * k1)
}

/// Gaussian envelope centered on the box corner, the point of the torus
/// farthest from the origin, with periodically wrapped distance.
fn corner_envelope(grid: &Grid3D, width: f64, x: RealVec3) -> f64 {
    let l = grid.half_width();
    let mut d2 = 0.0;
    for v in x.0 {
        let d = (v + l).rem_euclid(2.0 * l);
        let d = d.min(2.0 * l - d);
        d2 += d * d;
    }
    (-0.5 * d2 / (width * width)).exp()
}

/// Quasi-mode for `H_A` at `λ₀` built from a plane wave of helicity `+1`.
/// For `A ≢ 0` the plane wave is localized by an envelope of width
/// `n_index·L/16` around the box corner.
pub fn build_weyl_quasimode(
    pot: &PotentialSpec,
    mass: f64,
    lambda0: f64,
    n_index: usize,
    grid: Grid3D,
) -> Result<WeylQuasimode> {
    if n_index == 0 {
        return Err(DtlError::Precondition("n_index must be >= 1".into()));
    }
    let (nu0, a, b) = weyl_coefficients(lambda0, mass)?;
    let rel = ((mass * a + nu0 * b - lambda0 * a).powi(2)
        + (nu0 * a - mass * b - lambda0 * b).powi(2))
    .sqrt();
    let k = nearest_lattice_vector(&grid, nu0);
    let chi = positive_helicity(k);
    let free = pot.is_identically_zero();
    let width = (!free).then(|| n_index as f64 * grid.half_width() / 16.0);
    let l = grid.half_width();
    let field = Field::sample4(grid, |x| {
        // Phase measured from the first node keeps the plane wave exactly periodic.
        let phase = k[0] * (x.0[0] + l) + k[1] * (x.0[1] + l) + k[2] * (x.0[2] + l);
        let env = width.map_or(1.0, |w| corner_envelope(&grid, w, x));
        let psi = chi.scale(C64::from_polar(env, phase));
        SpinorC4::new(psi * a, psi * b)
    })?;
    let field = field.normalized()?;
    let h = OperatorHandle::dirac(grid, pot, mass)?;
    let residual = residual_norm(&h, &field, lambda0)?;
    let k_norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    Ok(WeylQuasimode {
        lambda0,
        mass,
        nu0,
        a,
        b,
        k,
        k_norm,
        n_index,
        envelope_width: width,
        eigen_relation_error: rel,
        residual,
        field: Some(field),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_solve_the_two_by_two_relation() {
        for (l0, m) in [(1.0, 1.0), (1.5, 1.0), (-2.0, 1.0), (3.0, 0.5), (-1.0, 1.0)] {
            let (nu0, a, b) = weyl_coefficients(l0, m).unwrap();
            assert!((a * a + b * b - 1.0).abs() < 1e-15);
            assert!((m * a + nu0 * b - l0 * a).abs() < 1e-12);
            assert!((nu0 * a - m * b - l0 * b).abs() < 1e-12);
        }
        assert_eq!(weyl_coefficients(1.0, 1.0).unwrap(), (0.0, 1.0, 0.0));
        assert!(matches!(
            weyl_coefficients(0.5, 1.0),
            Err(DtlError::Domain(_))
        ));
    }

    #[test]
    fn helicity_spinors() {
        for k in [
            [0.3, -0.2, 0.9],
            [0.1, 0.4, -0.7],
            [0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0],
        ] {
            let s = positive_helicity(k);
            let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            let t = crate::spinor::sigma_dot(RealVec3(k)).apply(&s);
            assert!((t - s * kn).norm() < 1e-14);
        }
    }

    #[test]
    fn free_quasimodes_are_exact() {
        let g = Grid3D::new(8, 3.0).unwrap();
        let zero = PotentialSpec::scaled(0.0, PotentialSpec::loss_yau_default()).unwrap();
        let w = build_weyl_quasimode(&zero, 1.0, 1.0, 1, g).unwrap();
        assert!(w.residual < 1e-12);
        let k1 = std::f64::consts::PI / 3.0;
        let l0 = (1.0 + 2.0 * k1 * k1).sqrt();
        let w = build_weyl_quasimode(&zero, 1.0, l0, 1, g).unwrap();
        assert!((w.k_norm - 2f64.sqrt() * k1).abs() < 1e-12);
        assert!(w.residual < 1e-10, "{}", w.residual);
        assert!(build_weyl_quasimode(&zero, 1.0, 0.5, 1, g).is_err());
    }
}
