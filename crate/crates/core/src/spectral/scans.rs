use serde::{Deserialize, Serialize};

use super::{eigs_near, EigenOptions};
use crate::error::{DtlError, Result};
use crate::grid::{Grid3D, OperatorHandle};
use crate::potentials::PotentialSpec;

/// Relative half-width of the `±m` neighborhoods excluded from gap scans.
pub const GAP_EDGE_EXCLUSION: f64 = 0.05;

/// Distance from `λ` to the nearest eigenvalue of `H_A`, against the
/// distance `min(|λ − m|, |λ + m|)` to the essential spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub lambda: f64,
    pub proxy: f64,
    pub gap_distance: f64,
    /// `proxy / gap_distance`; 1 when no spurious eigenvalue sits in the gap.
    pub ratio: f64,
    pub nearest_eigenvalue: f64,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScan {
    pub mass: f64,
    pub points: Vec<GapPoint>,
    pub seed: u64,
}

impl GapScan {
    pub fn min_ratio(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.ratio)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("lambda,proxy\n");
        for p in &self.points {
            s.push_str(&format!("{},{:e}\n", p.lambda, p.proxy));
        }
        s
    }
}

/// Probe the gap `(−m, m)` of `H_A` at the given energies.
pub fn gap_scan(
    pot: &PotentialSpec,
    mass: f64,
    grid: Grid3D,
    lambdas: &[f64],
    opts: &EigenOptions,
) -> Result<GapScan> {
    let op = OperatorHandle::dirac(grid, pot, mass)?;
    gap_scan_with(&op, lambdas, opts)
}

pub(crate) fn gap_scan_with(
    op: &OperatorHandle,
    lambdas: &[f64],
    opts: &EigenOptions,
) -> Result<GapScan> {
    let mass = op.mass();
    let edge = mass * (1.0 - GAP_EDGE_EXCLUSION);
    if lambdas.is_empty() {
        return Err(DtlError::Precondition("no energies to scan".into()));
    }
    for &l in lambdas {
        if !(l.abs() <= edge) {
            return Err(DtlError::Precondition(format!(
                "energy {l} is outside the scanned gap [-{edge}, {edge}] (thresholds ±{mass} excluded)"
            )));
        }
    }
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let r = eigs_near(
            op,
            lambda,
            &EigenOptions {
                count: 1,
                ..opts.clone()
            },
        )?;
        let nearest = r.report.eigenvalues[0];
        let proxy = (nearest - lambda).abs();
        let gap_distance = (lambda - mass).abs().min((lambda + mass).abs());
        points.push(GapPoint {
            lambda,
            proxy,
            gap_distance,
            ratio: proxy / gap_distance,
            nearest_eigenvalue: nearest,
            residual: r.report.residuals[0],
            converged: r.report.converged,
        });
    }
    Ok(GapScan {
        mass,
        points,
        seed: opts.seed,
    })
}

/// [`gap_scan`] at `resolution` evenly spaced energies strictly inside the
/// excluded-edge gap.
pub fn gap_scan_uniform(
    pot: &PotentialSpec,
    mass: f64,
    grid: Grid3D,
    resolution: usize,
    opts: &EigenOptions,
) -> Result<GapScan> {
    if resolution < 3 {
        return Err(DtlError::Precondition(
            "gap scan resolution must be >= 3".into(),
        ));
    }
    let edge = mass * (1.0 - GAP_EDGE_EXCLUSION);
    let lambdas: Vec<f64> = (0..resolution)
        .map(|i| -edge + 2.0 * edge * i as f64 / (resolution - 1) as f64)
        .collect();
    gap_scan(pot, mass, grid, &lambdas, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub t: f64,
    pub lambda_min: f64,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingScan {
    pub points: Vec<CouplingPoint>,
    pub seed: u64,
}

impl CouplingScan {
    /// Index of the smallest `|λ_min|`.
    pub fn argmin(&self) -> usize {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.lambda_min.total_cmp(&b.1.lambda_min))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Whether the minimum is interior with both neighbors strictly larger.
    pub fn has_isolated_minimum(&self) -> bool {
        let i = self.argmin();
        i > 0
            && i + 1 < self.points.len()
            && self.points[i - 1].lambda_min > self.points[i].lambda_min
            && self.points[i + 1].lambda_min > self.points[i].lambda_min
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("t,lambda_min\n");
        for p in &self.points {
            s.push_str(&format!("{},{:e}\n", p.t, p.lambda_min));
        }
        s
    }
}

/// `|λ_min(T_{tA})|` over the coupling constants `t_values`.
pub fn coupling_scan(
    base: &PotentialSpec,
    t_values: &[f64],
    grid: Grid3D,
    opts: &EigenOptions,
) -> Result<CouplingScan> {
    if t_values.len() < 3 || t_values.iter().any(|t| !t.is_finite()) {
        return Err(DtlError::Precondition(
            "coupling scan needs >= 3 finite couplings".into(),
        ));
    }
    let mut points = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let spec = PotentialSpec::scaled(t, base.clone())?;
        let op = OperatorHandle::weyl_dirac(grid, &spec)?;
        let r = eigs_near(
            &op,
            0.0,
            &EigenOptions {
                count: 1,
                ..opts.clone()
            },
        )?;
        points.push(CouplingPoint {
            t,
            lambda_min: r.report.eigenvalues[0].abs(),
            residual: r.report.residuals[0],
            converged: r.report.converged,
        });
    }
    Ok(CouplingScan {
        points,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_gap_is_clean() {
        let g = Grid3D::new(8, 3.0).unwrap();
        let zero = PotentialSpec::scaled(0.0, PotentialSpec::loss_yau_default()).unwrap();
        let s = gap_scan(&zero, 1.0, g, &[-0.5, 0.0, 0.5], &EigenOptions::default()).unwrap();
        assert!(
            s.points.iter().all(|p| (p.ratio - 1.0).abs() < 1e-6),
            "{:?}",
            s.points
        );
        assert!(s.points[1].proxy >= 1.0 - 1e-6);
        assert!(gap_scan(&zero, 1.0, g, &[1.0], &EigenOptions::default()).is_err());
        assert!(gap_scan_uniform(&zero, 1.0, g, 2, &EigenOptions::default()).is_err());
    }

    #[test]
    fn coupling_scan_needs_three_values() {
        let g = Grid3D::new(8, 3.0).unwrap();
        let ly = PotentialSpec::loss_yau_default();
        assert!(coupling_scan(&ly, &[0.0, 1.0], g, &EigenOptions::default()).is_err());
        let s = coupling_scan(&ly, &[0.0, 0.5, 1.0], g, &EigenOptions::default()).unwrap();
        assert!(s.points[0].lambda_min < 1e-10);
        assert_eq!(s.argmin(), 0);
        assert!(!s.has_isolated_minimum());
    }
}
