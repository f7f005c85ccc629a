use serde::{Deserialize, Serialize};

use crate::error::{DtlError, Result};
use crate::grid::Field;
use crate::potentials::least_squares;
use crate::RealVec3;

/// Half-width of the exponent bands around 2 (mode tail) and 1 (resonance tail).
pub const DECAY_DELTA: f64 = 0.25;

/// Mean amplitudes at or below this are treated as numerically zero.
pub const NOISE_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    ModeTail,
    ResonanceTail,
    Undetermined,
}

impl DecayVerdict {
    pub fn from_exponent(e: f64) -> Self {
        if (e - 2.0).abs() <= DECAY_DELTA {
            DecayVerdict::ModeTail
        } else if (e - 1.0).abs() <= DECAY_DELTA {
            DecayVerdict::ResonanceTail
        } else {
            DecayVerdict::Undetermined
        }
    }
}

/// Power-law fit `mean_ω |f(rω)| ≈ C r^{-exponent}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub window: (f64, f64),
    pub verdict: DecayVerdict,
    /// `(r, mean_ω |f(rω)|)` per sampled radius.
    pub amplitudes: Vec<(f64, f64)>,
}

impl DecayFit {
    /// A resonance tail for a potential decaying faster than `⟨x⟩^{-3/2}`
    /// contradicts the absence of threshold resonances.
    pub fn inconsistent_for(&self, rho: f64) -> bool {
        rho > 1.5 && self.verdict == DecayVerdict::ResonanceTail
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("r,amplitude\n");
        for (r, a) in &self.amplitudes {
            s.push_str(&format!("{r},{a:e}\n"));
        }
        s
    }
}

/// Fit the decay of an amplitude evaluator over `radii × directions`.
pub fn decay_fit<F>(amplitude: F, radii: &[f64], directions: &[RealVec3]) -> Result<DecayFit>
where
    F: Fn(RealVec3) -> Result<f64>,
{
    if radii.len() < 6 || directions.len() < 6 {
        return Err(DtlError::Precondition(format!(
            "decay fit needs >= 6 radii and >= 6 directions, got {} and {}",
            radii.len(),
            directions.len()
        )));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DtlError::Precondition(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    let mut amps = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut s = 0.0;
        for w in directions {
            s += amplitude(*w * r)?;
        }
        amps.push((r, s / directions.len() as f64));
    }
    if amps.iter().any(|a| !(a.1 > NOISE_FLOOR)) {
        return Err(DtlError::ClassificationUndetermined(
            "amplitude below the noise floor in the window".into(),
        ));
    }
    let (slope, _, stderr) = least_squares(amps.iter().map(|(r, a)| (r.ln(), a.ln())));
    let exponent = -slope;
    Ok(DecayFit {
        exponent,
        exponent_stderr: stderr,
        window: (radii[0], *radii.last().unwrap()),
        verdict: DecayVerdict::from_exponent(exponent),
        amplitudes: amps,
    })
}

/// [`decay_fit`] of the pointwise spinor norm of a grid field, trilinearly
/// interpolated; the window must lie inside the box.
pub fn decay_fit_field(field: &Field, radii: &[f64], directions: &[RealVec3]) -> Result<DecayFit> {
    let grid = *field.grid();
    let norms: Vec<f64> = (0..grid.len()).map(|i| field.pointwise_norm(i)).collect();
    decay_fit(|x| grid.interpolate(&norms, x), radii, directions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{directions_26, geometric_radii};

    #[test]
    fn verdict_bands() {
        assert_eq!(DecayVerdict::from_exponent(2.2), DecayVerdict::ModeTail);
        assert_eq!(
            DecayVerdict::from_exponent(0.8),
            DecayVerdict::ResonanceTail
        );
        assert_eq!(DecayVerdict::from_exponent(1.5), DecayVerdict::Undetermined);
        assert_eq!(DecayVerdict::from_exponent(0.0), DecayVerdict::Undetermined);
    }

    #[test]
    fn synthetic_tails() {
        let r = geometric_radii(20.0, 200.0, 8);
        let d = directions_26();
        let inv = decay_fit(|x| Ok(1.0 / x.norm()), &r, &d).unwrap();
        assert!((inv.exponent - 1.0).abs() < 1e-12);
        assert_eq!(inv.verdict, DecayVerdict::ResonanceTail);
        assert!(inv.inconsistent_for(2.0));
        let c = decay_fit(|_| Ok(0.7), &r, &d).unwrap();
        assert!(c.exponent.abs() < 1e-12);
        assert_eq!(c.verdict, DecayVerdict::Undetermined);
        assert!(decay_fit(|_| Ok(0.0), &r, &d).is_err());
        assert!(decay_fit(|_| Ok(1.0), &r[..5], &d).is_err());
    }
}
