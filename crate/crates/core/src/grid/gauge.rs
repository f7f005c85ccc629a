//! Real-field spectral calculus and the gauge transformation
//! `A ↦ A + ∇χ`, `φ ↦ e^{iχ} φ` with `−Δχ = div A`.

use std::sync::Arc;

use super::field::{Field, Rank};
use super::operator::sample_potential;
use super::Grid3D;
use crate::error::{DtlError, Result};
use crate::exec;
use crate::fft::Fft3;
use crate::potentials::{eval_potential, PotentialSpec};
use crate::quadrature::gauss_legendre_on;
use crate::{RealVec3, C64};

/// Relative net flux `|∮A·n| / ∮|A|` above which the periodic Poisson solve
/// would silently remove a non-decaying divergence.
pub const GAUGE_FLUX_TOL: f64 = 1e-6;

/// Three real nodal fields on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid3D,
    comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn new(grid: Grid3D, comps: [Vec<f64>; 3]) -> Self {
        assert!(comps.iter().all(|c| c.len() == grid.len()));
        VectorField { grid, comps }
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn at(&self, idx: usize) -> RealVec3 {
        RealVec3::new(self.comps[0][idx], self.comps[1][idx], self.comps[2][idx])
    }

    /// Trilinear interpolation of each component.
    pub fn interpolate(&self, x: RealVec3) -> Result<RealVec3> {
        Ok(RealVec3::new(
            self.grid.interpolate(&self.comps[0], x)?,
            self.grid.interpolate(&self.comps[1], x)?,
            self.grid.interpolate(&self.comps[2], x)?,
        ))
    }

    /// Discrete L² norm `(h³ Σ |v|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        let n = self.grid.len();
        let s = exec::sum_f64(n, |i| {
            self.comps[0][i].powi(2) + self.comps[1][i].powi(2) + self.comps[2][i].powi(2)
        });
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn sub(&self, o: &VectorField) -> Result<VectorField> {
        self.grid.check_same(&o.grid)?;
        let c = |a: usize| {
            self.comps[a]
                .iter()
                .zip(&o.comps[a])
                .map(|(x, y)| x - y)
                .collect()
        };
        Ok(VectorField::new(self.grid, [c(0), c(1), c(2)]))
    }
}

/// Gauge function χ sampled on a grid, with its spectral gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFieldHandle {
    grid: Grid3D,
    values: Vec<f64>,
    gradient: VectorField,
}

impl ScalarFieldHandle {
    pub fn new(grid: Grid3D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DtlError::GridMismatch(format!(
                "{} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DtlError::NonFinite("gauge function".into()));
        }
        let fft = Fft3::new(grid.n());
        let spec = to_spectrum(&fft, &values);
        let gradient = gradient_of_spectrum(&fft, &grid, &spec);
        Ok(ScalarFieldHandle {
            grid,
            values,
            gradient,
        })
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradient(&self) -> &VectorField {
        &self.gradient
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn to_spectrum(fft: &Fft3, values: &[f64]) -> Vec<C64> {
    let mut s: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft.forward(&mut s);
    s
}

fn to_real(fft: &Fft3, mut s: Vec<C64>) -> Vec<f64> {
    fft.inverse(&mut s);
    s.into_iter().map(|z| z.re).collect()
}

/// Apply `f(k, ŝ)` at each wavevector, with the Nyquist bin dropped.
fn map_spectrum<F>(grid: &Grid3D, s: &[C64], f: F) -> Vec<C64>
where
    F: Fn([f64; 3], C64) -> C64 + Sync + Send,
{
    let k = grid.real_wavenumbers();
    exec::map_collect(grid.len(), |idx| {
        let (i, j, l) = grid.coords(idx);
        f([k[i], k[j], k[l]], s[idx])
    })
}

fn gradient_of_spectrum(fft: &Fft3, grid: &Grid3D, s: &[C64]) -> VectorField {
    let comp = |a: usize| {
        let d = map_spectrum(grid, s, |kv, z| z * C64::new(0.0, kv[a]));
        to_real(fft, d)
    };
    VectorField::new(*grid, [comp(0), comp(1), comp(2)])
}

fn vector_spectra(fft: &Fft3, a: &VectorField) -> [Vec<C64>; 3] {
    let c = a.components();
    [
        to_spectrum(fft, &c[0]),
        to_spectrum(fft, &c[1]),
        to_spectrum(fft, &c[2]),
    ]
}

fn div_of_spectra(grid: &Grid3D, s: &[Vec<C64>; 3]) -> Vec<C64> {
    let k = grid.real_wavenumbers();
    exec::map_collect(grid.len(), |idx| {
        let (i, j, l) = grid.coords(idx);
        C64::new(0.0, 1.0) * (s[0][idx] * k[i] + s[1][idx] * k[j] + s[2][idx] * k[l])
    })
}

/// Spectral divergence of a nodal vector field.
pub fn div_spectral(a: &VectorField) -> Vec<f64> {
    let grid = *a.grid();
    let fft = Fft3::new(grid.n());
    let s = vector_spectra(&fft, a);
    to_real(&fft, div_of_spectra(&grid, &s))
}

/// Spectral curl of a nodal vector field.
pub fn curl_spectral(a: &VectorField) -> VectorField {
    let grid = *a.grid();
    let fft = Fft3::new(grid.n());
    let s = vector_spectra(&fft, a);
    let k = grid.real_wavenumbers();
    let comp = |c: usize| {
        let (p, q) = ((c + 1) % 3, (c + 2) % 3);
        let d = exec::map_collect(grid.len(), |idx| {
            let (i, j, l) = grid.coords(idx);
            let kv = [k[i], k[j], k[l]];
            C64::new(0.0, 1.0) * (s[q][idx] * kv[p] - s[p][idx] * kv[q])
        });
        to_real(&fft, d)
    };
    VectorField::new(grid, [comp(0), comp(1), comp(2)])
}

/// Net outward flux of `A` through the surface of `[-L, L]³` and the surface
/// integral of `|A|`, both by 24-point Gauss–Legendre per face direction.
fn boundary_flux(spec: &PotentialSpec, l: f64) -> Result<(f64, f64)> {
    let rule = gauss_legendre_on(24, -l, l);
    let mut net = 0.0;
    let mut abs = 0.0;
    for axis in 0..3 {
        let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            for &(u, wu) in &rule {
                for &(v, wv) in &rule {
                    let mut x = [0.0; 3];
                    x[axis] = sign * l;
                    x[p] = u;
                    x[q] = v;
                    let a = eval_potential(spec, RealVec3(x))?;
                    net += wu * wv * sign * a.0[axis];
                    abs += wu * wv * a.norm();
                }
            }
        }
    }
    Ok((net, abs))
}

/// Solve `−Δχ = div A` spectrally (zero-mean χ) and return the gauged
/// potential `A + ∇χ` together with χ.
pub fn gauge_transform(
    potential: &PotentialSpec,
    grid: Grid3D,
) -> Result<(PotentialSpec, ScalarFieldHandle)> {
    if !matches!(potential, PotentialSpec::Sampled(_)) {
        let (net, abs) = boundary_flux(potential, grid.half_width())?;
        if abs > 0.0 && net.abs() > GAUGE_FLUX_TOL * abs {
            return Err(DtlError::Gauge(format!(
                "net flux {net:.3e} through the box (relative {:.3e}): divergence has a non-zero mean",
                net.abs() / abs
            )));
        }
    }
    let a = sample_potential(potential, &grid)?;
    let fft = Fft3::new(grid.n());
    let s = vector_spectra(&fft, &a);
    let div = div_of_spectra(&grid, &s);
    let k = grid.real_wavenumbers();
    let chi_hat = exec::map_collect(grid.len(), |idx| {
        let (i, j, l) = grid.coords(idx);
        let k2 = k[i] * k[i] + k[j] * k[j] + k[l] * k[l];
        if k2 == 0.0 {
            C64::default()
        } else {
            div[idx] / k2
        }
    });
    let chi = ScalarFieldHandle::new(grid, to_real(&fft, chi_hat))?;
    let gauged = PotentialSpec::Gauged {
        inner: Box::new(potential.clone()),
        chi: Arc::new(chi.clone()),
    };
    Ok((gauged, chi))
}

/// Multiply a 2-spinor field pointwise by `e^{iχ}`.
pub fn gauged_mode(mode: &Field, chi: &ScalarFieldHandle) -> Result<Field> {
    mode.grid().check_same(chi.grid())?;
    if mode.rank() != Rank::Two {
        return Err(DtlError::RankMismatch {
            expected: 2,
            found: mode.rank().components(),
        });
    }
    let n = chi.grid().len();
    let mut data = mode.data().to_vec();
    exec::for_each_chunk_mut(&mut data, exec::CHUNK, |c, chunk| {
        for (o, z) in chunk.iter_mut().enumerate() {
            let idx = (c * exec::CHUNK + o) % n;
            *z *= C64::from_polar(1.0, chi.values()[idx]);
        }
    });
    Field::from_data(*mode.grid(), Rank::Two, data)
}
