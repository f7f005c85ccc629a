//! Magnetic vector potentials and their decay classification.
//!
//! The Loss–Yau potential
//!
//! ```text
//! A_LY(x) = 3⟨x⟩⁻⁴ { (1 − |x|²) w₀ + 2 (w₀·x) x + 2 w₀ × x },   w₀ = φ₀·(σφ₀)
//! ```
//!
//! has `|A_LY(x)| = 3⟨x⟩⁻²` and carries the zero mode
//! `⟨x⟩⁻³ (I₂ + iσ·x) φ₀` of `σ·(D − A_LY)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::analytic::loss_yau_zero_mode;
use crate::error::{DtlError, Result};
use crate::exec;
use crate::grid::{Grid3D, ScalarFieldHandle, VectorField};
use crate::io;
use crate::quadrature::{directions_26, geometric_radii, RadialPanels, SphereRule};
use crate::spinor::spin_density;
use crate::{RealVec3, SpinorC2, C64};

/// Minimum fitted exponent accepted as evidence of `|A| ≤ C⟨x⟩^{-ρ}`, `ρ > 1`.
pub const SU_MARGIN_RHO: f64 = 1.05;

/// Amplitude below which a sample counts as zero.
pub const AMPLITUDE_FLOOR: f64 = 1e-300;

/// Relative agreement required between the two tail models of `∫|A|³`.
pub const CUBIC_CONVERGENCE_TOL: f64 = 1e-2;

/// Evaluator of a spinor-valued function on ℝ³.
pub type SpinorFn = Arc<dyn Fn(RealVec3) -> SpinorC2 + Send + Sync>;

/// A potential sampled on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPotential {
    pub field: VectorField,
    /// Companion file the samples were read from, if any.
    pub source: Option<PathBuf>,
}

/// Declarative description of a vector potential.
#[derive(Clone, Debug)]
pub enum PotentialSpec {
    LossYau {
        phi0: SpinorC2,
    },
    Scaled {
        t: f64,
        inner: Box<PotentialSpec>,
    },
    Gauged {
        inner: Box<PotentialSpec>,
        chi: Arc<ScalarFieldHandle>,
    },
    Amn {
        ell: u32,
        c_ell: f64,
    },
    Sampled(Arc<SampledPotential>),
}

impl PotentialSpec {
    /// Loss–Yau potential with a checked unit spinor.
    pub fn loss_yau(phi0: SpinorC2) -> Result<Self> {
        check_unit(&phi0)?;
        Ok(PotentialSpec::LossYau { phi0 })
    }

    /// Loss–Yau potential with `φ₀ = (1, 0)`.
    pub fn loss_yau_default() -> Self {
        PotentialSpec::LossYau {
            phi0: SpinorC2::real(1.0, 0.0),
        }
    }

    pub fn scaled(t: f64, inner: PotentialSpec) -> Result<Self> {
        if !t.is_finite() {
            return Err(DtlError::Config(format!(
                "scale factor must be finite, got {t}"
            )));
        }
        Ok(PotentialSpec::Scaled {
            t,
            inner: Box::new(inner),
        })
    }

    /// Adam–Muratori–Nash potential `A^(ℓ)`. For `ℓ ≥ 1` an ansatz must have
    /// been registered with [`register_amn_ansatz`].
    pub fn amn(ell: u32, c_ell: f64) -> Result<Self> {
        if !c_ell.is_finite() {
            return Err(DtlError::Config(format!(
                "c_ell must be finite, got {c_ell}"
            )));
        }
        if ell >= 1 && amn_ansatz(ell).is_none() {
            return Err(unregistered_amn(ell));
        }
        Ok(PotentialSpec::Amn { ell, c_ell })
    }

    pub fn sampled(field: VectorField) -> Self {
        PotentialSpec::Sampled(Arc::new(SampledPotential {
            field,
            source: None,
        }))
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            PotentialSpec::LossYau { .. } => "loss_yau".into(),
            PotentialSpec::Scaled { t, inner } => format!("scaled({t}, {})", inner.label()),
            PotentialSpec::Gauged { inner, .. } => format!("gauged({})", inner.label()),
            PotentialSpec::Amn { ell, c_ell } => format!("amn(ell={ell}, c={c_ell})"),
            PotentialSpec::Sampled(_) => "sampled".into(),
        }
    }

    /// Whether the variant is identically zero by construction.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            PotentialSpec::Scaled { t, inner } => *t == 0.0 || inner.is_identically_zero(),
            PotentialSpec::Amn { c_ell, .. } => *c_ell == 0.0,
            PotentialSpec::Sampled(s) => s
                .field
                .components()
                .iter()
                .all(|c| c.iter().all(|v| *v == 0.0)),
            _ => false,
        }
    }

    /// The Loss–Yau spinor underlying this potential, when there is one.
    pub fn loss_yau_spinor(&self) -> Option<SpinorC2> {
        match self {
            PotentialSpec::LossYau { phi0 } => Some(*phi0),
            PotentialSpec::Amn { ell: 0, c_ell } if *c_ell == 3.0 => Some(SpinorC2::real(1.0, 0.0)),
            _ => None,
        }
    }
}

fn check_unit(phi0: &SpinorC2) -> Result<()> {
    let n = phi0.norm();
    if (n - 1.0).abs() > 1e-12 || !n.is_finite() {
        Err(DtlError::NonUnitSpinor(n))
    } else {
        Ok(())
    }
}

fn unregistered_amn(ell: u32) -> DtlError {
    DtlError::UnsupportedVariant(format!(
        "AMN ell={ell} requires a registered zero-mode ansatz"
    ))
}

fn amn_registry() -> &'static RwLock<HashMap<u32, SpinorFn>> {
    static REG: OnceLock<RwLock<HashMap<u32, SpinorFn>>> = OnceLock::new();
    REG.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Register the zero-mode ansatz `ψ^(ℓ)` for `ℓ ≥ 1`; replaces any earlier one.
pub fn register_amn_ansatz(ell: u32, psi: SpinorFn) -> Result<()> {
    if ell == 0 {
        return Err(DtlError::Precondition(
            "ell = 0 is built in (Loss–Yau mode)".into(),
        ));
    }
    amn_registry()
        .write()
        .expect("AMN registry poisoned")
        .insert(ell, psi);
    Ok(())
}

/// The zero-mode evaluator for `A^(ℓ)`, built in for `ℓ = 0`.
pub fn amn_ansatz(ell: u32) -> Option<SpinorFn> {
    if ell == 0 {
        let phi0 = SpinorC2::real(1.0, 0.0);
        return Some(Arc::new(move |x| loss_yau_zero_mode(&phi0, x)));
    }
    amn_registry()
        .read()
        .expect("AMN registry poisoned")
        .get(&ell)
        .cloned()
}

/// `w₀ = (⟨φ₀,σ₁φ₀⟩, ⟨φ₀,σ₂φ₀⟩, ⟨φ₀,σ₃φ₀⟩)` for a unit spinor.
pub fn w0_of(phi0: &SpinorC2) -> Result<RealVec3> {
    check_unit(phi0)?;
    Ok(spin_density(phi0))
}

/// `A_LY(x)` for unit `φ₀`.
pub fn loss_yau_potential(phi0: &SpinorC2, x: RealVec3) -> RealVec3 {
    let w0 = spin_density(phi0);
    let r2 = x.norm_sqr();
    let b2 = 1.0 + r2;
    let s = 3.0 / (b2 * b2);
    (w0 * (1.0 - r2) + x * (2.0 * w0.dot(x)) + w0.cross(x) * 2.0) * s
}

/// `A(x)` for any variant.
pub fn eval_potential(spec: &PotentialSpec, x: RealVec3) -> Result<RealVec3> {
    match spec {
        PotentialSpec::LossYau { phi0 } => Ok(loss_yau_potential(phi0, x)),
        PotentialSpec::Scaled { t, inner } => {
            if *t == 0.0 {
                // Still validate the inner variant.
                eval_potential(inner, x)?;
                return Ok(RealVec3::ZERO);
            }
            Ok(eval_potential(inner, x)? * *t)
        }
        PotentialSpec::Gauged { inner, chi } => {
            let a = eval_potential(inner, x)?;
            Ok(a + chi.gradient().interpolate(x)?)
        }
        PotentialSpec::Amn { ell, c_ell } => {
            let psi = amn_ansatz(*ell).ok_or_else(|| unregistered_amn(*ell))?;
            let p = psi(x);
            let d = p.norm_sqr();
            if d == 0.0 {
                return Err(DtlError::Domain(format!(
                    "AMN ansatz vanishes at {:?}",
                    x.0
                )));
            }
            let h = c_ell / (1.0 + x.norm_sqr());
            Ok(spin_density(&p) * (h / d))
        }
        PotentialSpec::Sampled(s) => s.field.interpolate(x),
    }
}

/// Evidence for membership in the decay classes (SU), (BE) and (E).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayClassReport {
    pub rho_fit: f64,
    pub sup_weighted_norm: f64,
    pub in_su: bool,
    pub in_be: bool,
    pub cubic_integral: f64,
    pub in_e: bool,
    pub sample_count: usize,
}

/// `∫_{|x|<R} |A|³ dx` by radial panels × product sphere rule, deterministic
/// pairwise reduction across panels.
fn cubic_integral_ball(spec: &PotentialSpec, r_max: f64) -> Result<(f64, f64)> {
    let panels = RadialPanels::default();
    let sphere = SphereRule::product(16, 32);
    let edges = panels.edges(r_max);
    let shells: Vec<(f64, f64)> = edges
        .windows(2)
        .flat_map(|w| panels.panel_nodes(w[0], w[1]))
        .collect();
    let vals = exec::map_collect(shells.len(), |s| -> Result<f64> {
        let (r, wr) = shells[s];
        let mut acc = 0.0;
        for (w, q) in &sphere.points {
            acc += q * eval_potential(spec, *w * r)?.norm().powi(3);
        }
        Ok(acc * r * r * wr)
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    let mut surface = 0.0;
    for (w, q) in &sphere.points {
        surface += q * eval_potential(spec, *w * r_max)?.norm().powi(3);
    }
    Ok((exec::pairwise_sum(&vals), surface))
}

/// Fit `log|A(rω)| ≈ c − ρ log r` over all samples and estimate `∫|A|³`.
pub fn classify_decay(
    spec: &PotentialSpec,
    radii: &[f64],
    directions: &[RealVec3],
) -> Result<DecayClassReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(DtlError::Precondition(
            "radii must be positive, strictly increasing, >= 2 values".into(),
        ));
    }
    if directions.is_empty() || directions.iter().any(|d| (d.norm() - 1.0).abs() > 1e-9) {
        return Err(DtlError::Precondition(
            "directions must be unit vectors".into(),
        ));
    }
    let mut pts = Vec::with_capacity(radii.len() * directions.len());
    for &r in radii {
        for &w in directions {
            let a = eval_potential(spec, w * r)?.norm();
            if a > AMPLITUDE_FLOOR {
                pts.push((r.ln(), a.ln(), r, a));
            }
        }
    }
    if pts.len() < 2 || {
        let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        hi <= lo
    } {
        return Err(DtlError::ClassificationUndetermined(
            "all sampled amplitudes are below 1e-300 (or at a single radius)".into(),
        ));
    }
    let (slope, _, _) = least_squares(pts.iter().map(|p| (p.0, p.1)));
    let rho_fit = -slope;
    let sup_weighted_norm = pts
        .iter()
        .map(|p| (1.0 + p.2 * p.2).powf(0.5 * rho_fit) * p.3)
        .fold(0.0, f64::max);

    let r_max = *radii.last().unwrap();
    let mut cubic_integral = f64::INFINITY;
    let mut in_be = false;
    if rho_fit > 1.0 {
        let (ball, surface) = cubic_integral_ball(spec, r_max)?;
        let (half_ball, half_surface) = cubic_integral_ball(spec, 0.5 * r_max)?;
        let p = 3.0 * rho_fit - 3.0;
        // Power-law tail from the outermost shell: ∫_R^∞ S r^{2} (R/r)^{3ρ} dr.
        let tail = |surf: f64, r: f64| surf * r.powi(3) / p;
        let model = ball + tail(surface, r_max);
        let half_model = half_ball + tail(half_surface, 0.5 * r_max);
        let q = 2f64.powf(p);
        let richardson = (q * ball - half_ball) / (q - 1.0);
        cubic_integral = model;
        in_be = model.is_finite()
            && ((model - richardson).abs()
                <= CUBIC_CONVERGENCE_TOL * model.abs().max(f64::MIN_POSITIVE))
            && ((model - half_model).abs()
                <= CUBIC_CONVERGENCE_TOL * model.abs().max(f64::MIN_POSITIVE));
    }
    Ok(DecayClassReport {
        rho_fit,
        sup_weighted_norm,
        in_su: rho_fit >= SU_MARGIN_RHO,
        in_be,
        cubic_integral,
        in_e: rho_fit > 1.0,
        sample_count: pts.len(),
    })
}

/// Classification with 24 geometric radii in `[10, 10³]` and 26 directions.
pub fn classify_decay_default(spec: &PotentialSpec) -> Result<DecayClassReport> {
    classify_decay(spec, &geometric_radii(10.0, 1e3, 24), &directions_26())
}

/// `c ∫|A|³`, the upper bound for `dim Ker(H_A ∓ m)` up to the caller's constant.
pub fn kernel_dim_bound(spec: &PotentialSpec, c: f64) -> Result<f64> {
    kernel_dim_bound_with(spec, c, &geometric_radii(10.0, 1e3, 24), &directions_26())
}

pub fn kernel_dim_bound_with(
    spec: &PotentialSpec,
    c: f64,
    radii: &[f64],
    directions: &[RealVec3],
) -> Result<f64> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(DtlError::Precondition(format!(
            "constant must be >= 0, got {c}"
        )));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let rep = classify_decay(spec, radii, directions)?;
    if !rep.in_be {
        return Err(DtlError::Precondition(format!(
            "potential is not in L³ on the samples (rho_fit = {:.3})",
            rep.rho_fit
        )));
    }
    Ok(c * rep.cubic_integral)
}

/// Ordinary least squares `y ≈ a·x + b`; returns `(a, b, stderr(a))`.
pub(crate) fn least_squares<I: Iterator<Item = (f64, f64)>>(pts: I) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = pts.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum();
    let stderr = if pts.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (a, b, stderr)
}

/// `∫|A_LY|³ = 27π²/4`.
pub const LOSS_YAU_CUBIC_INTEGRAL: f64 = 27.0 * PI * PI / 4.0;

// ---------------------------------------------------------------------------
// JSON wire format

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
enum PotentialWire {
    LossYau {
        phi0: [[f64; 2]; 2],
    },
    Scaled {
        t: f64,
        inner: Box<PotentialWire>,
    },
    Gauged {
        inner: Box<PotentialWire>,
        chi_file: PathBuf,
    },
    Amn {
        ell: u32,
        c_ell: f64,
    },
    Sampled {
        file: PathBuf,
    },
}

impl PotentialSpec {
    /// Parse the JSON object form; companion field files are resolved
    /// relative to `base_dir`.
    pub fn from_json(value: &serde_json::Value, base_dir: &Path) -> Result<Self> {
        let wire: PotentialWire = serde_json::from_value(value.clone())?;
        Self::from_wire(wire, base_dir)
    }

    pub fn from_json_str(s: &str, base_dir: &Path) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?, base_dir)
    }

    fn from_wire(w: PotentialWire, base: &Path) -> Result<Self> {
        Ok(match w {
            PotentialWire::LossYau { phi0 } => {
                let p = SpinorC2::new(
                    C64::new(phi0[0][0], phi0[0][1]),
                    C64::new(phi0[1][0], phi0[1][1]),
                );
                PotentialSpec::loss_yau(p)?
            }
            PotentialWire::Scaled { t, inner } => {
                PotentialSpec::scaled(t, Self::from_wire(*inner, base)?)?
            }
            PotentialWire::Amn { ell, c_ell } => PotentialSpec::amn(ell, c_ell)?,
            PotentialWire::Sampled { file } => {
                let path = base.join(&file);
                let (grid, comps) = io::read_real_fields(&path)?;
                if comps.len() != 3 {
                    return Err(DtlError::Format(format!(
                        "{} holds {} fields, expected 3",
                        path.display(),
                        comps.len()
                    )));
                }
                let mut it = comps.into_iter();
                let field = VectorField::new(
                    grid,
                    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
                );
                PotentialSpec::Sampled(Arc::new(SampledPotential {
                    field,
                    source: Some(file),
                }))
            }
            PotentialWire::Gauged { inner, chi_file } => {
                let path = base.join(&chi_file);
                let (grid, comps) = io::read_real_fields(&path)?;
                if comps.len() != 1 {
                    return Err(DtlError::Format(format!(
                        "{} holds {} fields, expected 1",
                        path.display(),
                        comps.len()
                    )));
                }
                let chi = ScalarFieldHandle::new(grid, comps.into_iter().next().unwrap())?;
                PotentialSpec::Gauged {
                    inner: Box::new(Self::from_wire(*inner, base)?),
                    chi: Arc::new(chi),
                }
            }
        })
    }

    /// JSON object form. Grid-backed variants write their companion files
    /// into `dir` (named `<stem>.bin`, `<stem>_chi.bin`, ...).
    pub fn to_json(&self, dir: &Path, stem: &str) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self.to_wire(dir, stem)?)?)
    }

    fn to_wire(&self, dir: &Path, stem: &str) -> Result<PotentialWire> {
        Ok(match self {
            PotentialSpec::LossYau { phi0 } => PotentialWire::LossYau {
                phi0: [[phi0.c0.re, phi0.c0.im], [phi0.c1.re, phi0.c1.im]],
            },
            PotentialSpec::Scaled { t, inner } => PotentialWire::Scaled {
                t: *t,
                inner: Box::new(inner.to_wire(dir, &format!("{stem}_inner"))?),
            },
            PotentialSpec::Amn { ell, c_ell } => PotentialWire::Amn {
                ell: *ell,
                c_ell: *c_ell,
            },
            PotentialSpec::Sampled(s) => {
                let name = PathBuf::from(format!("{stem}.bin"));
                let c = s.field.components();
                io::write_real_fields(&dir.join(&name), s.field.grid(), &[&c[0], &c[1], &c[2]])?;
                PotentialWire::Sampled { file: name }
            }
            PotentialSpec::Gauged { inner, chi } => {
                let name = PathBuf::from(format!("{stem}_chi.bin"));
                io::write_real_fields(&dir.join(&name), chi.grid(), &[chi.values()])?;
                PotentialWire::Gauged {
                    inner: Box::new(inner.to_wire(dir, &format!("{stem}_inner"))?),
                    chi_file: name,
                }
            }
        })
    }
}

/// Node grid a potential is tied to, if any.
pub fn potential_grid(spec: &PotentialSpec) -> Option<Grid3D> {
    match spec {
        PotentialSpec::Sampled(s) => Some(*s.field.grid()),
        PotentialSpec::Gauged { chi, .. } => Some(*chi.grid()),
        PotentialSpec::Scaled { inner, .. } => potential_grid(inner),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinor::sigma_dot;

    fn ly() -> PotentialSpec {
        PotentialSpec::loss_yau_default()
    }

    fn close(a: RealVec3, b: RealVec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn w0_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(
            w0_of(&SpinorC2::real(1.0, 0.0)).unwrap(),
            RealVec3::new(0., 0., 1.),
            1e-15
        ));
        assert!(close(
            w0_of(&SpinorC2::real(0.0, 1.0)).unwrap(),
            RealVec3::new(0., 0., -1.),
            1e-15
        ));
        assert!(close(
            w0_of(&SpinorC2::real(s, s)).unwrap(),
            RealVec3::new(1., 0., 0.),
            1e-15
        ));
        assert!(matches!(
            w0_of(&SpinorC2::real(1.0, 1.0)),
            Err(DtlError::NonUnitSpinor(_))
        ));
    }

    #[test]
    fn loss_yau_examples() {
        assert!(close(
            eval_potential(&ly(), RealVec3::ZERO).unwrap(),
            RealVec3::new(0., 0., 3.),
            1e-15
        ));
        assert!(close(
            eval_potential(&ly(), RealVec3::new(0., 0., 1.)).unwrap(),
            RealVec3::new(0., 0., 1.5),
            1e-15
        ));
        let z = PotentialSpec::scaled(0.0, ly()).unwrap();
        assert_eq!(
            eval_potential(&z, RealVec3::new(3., -1., 2.)).unwrap(),
            RealVec3::ZERO
        );
    }

    #[test]
    fn sigma_dot_a_ly_acts_as_scalar_on_zero_mode_density() {
        // (σ·w)ψ = |ψ|² ψ for w = ψ·σψ: the identity behind the AMN form.
        let psi = SpinorC2::new(C64::new(0.3, -0.2), C64::new(0.1, 0.8));
        let w = spin_density(&psi);
        let lhs = sigma_dot(w).apply(&psi);
        let rhs = psi * psi.norm_sqr();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn amn_zero_equals_loss_yau_at_c3() {
        let amn = PotentialSpec::amn(0, 3.0).unwrap();
        for x in [
            RealVec3::ZERO,
            RealVec3::new(0.5, -1.0, 2.0),
            RealVec3::new(-7.0, 3.0, 1.0),
        ] {
            let a = eval_potential(&amn, x).unwrap();
            let b = eval_potential(&ly(), x).unwrap();
            assert!(close(a, b, 1e-13 * (1.0 + b.norm())), "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn amn_higher_ell_needs_registration() {
        assert!(matches!(
            PotentialSpec::amn(7, 1.0),
            Err(DtlError::UnsupportedVariant(_))
        ));
        let wire = PotentialSpec::Amn { ell: 8, c_ell: 1.0 };
        assert!(eval_potential(&wire, RealVec3::ZERO).is_err());
        register_amn_ansatz(9, Arc::new(|_| SpinorC2::real(1.0, 0.0))).unwrap();
        let a = PotentialSpec::amn(9, 2.0).unwrap();
        // h = 2/⟨0⟩² = 2, w = (0, 0, 1), |ψ|² = 1.
        assert!(close(
            eval_potential(&a, RealVec3::ZERO).unwrap(),
            RealVec3::new(0., 0., 2.),
            1e-15
        ));
        assert!(register_amn_ansatz(0, Arc::new(|_| SpinorC2::ZERO)).is_err());
    }

    #[test]
    fn classify_loss_yau() {
        let rep = classify_decay_default(&ly()).unwrap();
        assert!(
            (rep.rho_fit - 2.0).abs() <= 0.01,
            "rho_fit = {}",
            rep.rho_fit
        );
        assert!(rep.in_su && rep.in_be && rep.in_e);
        assert!((rep.cubic_integral / LOSS_YAU_CUBIC_INTEGRAL - 1.0).abs() < 0.01);
        assert_eq!(rep.sample_count, 24 * 26);
    }

    #[test]
    fn classify_zero_is_undetermined() {
        let z = PotentialSpec::scaled(0.0, ly()).unwrap();
        assert!(matches!(
            classify_decay_default(&z),
            Err(DtlError::ClassificationUndetermined(_))
        ));
    }

    #[test]
    fn classify_rejects_bad_samples() {
        let d = directions_26();
        assert!(classify_decay(&ly(), &[1.0], &d).is_err());
        assert!(classify_decay(&ly(), &[2.0, 1.0], &d).is_err());
        assert!(classify_decay(&ly(), &[1.0, 2.0], &[RealVec3::new(1.0, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn kernel_bound_examples() {
        let b = kernel_dim_bound(&ly(), 1.0).unwrap();
        assert!((b / LOSS_YAU_CUBIC_INTEGRAL - 1.0).abs() < 0.01);
        let t = 1e-3;
        let s = kernel_dim_bound(&PotentialSpec::scaled(t, ly()).unwrap(), 1.0).unwrap();
        assert!((s / (t.powi(3) * b) - 1.0).abs() < 1e-9);
        assert_eq!(kernel_dim_bound(&ly(), 0.0).unwrap(), 0.0);
        assert!(kernel_dim_bound(&ly(), -1.0).is_err());
    }

    #[test]
    fn slow_decay_is_not_su() {
        // A ~ r^{-1/2}: the AMN form with a ψ whose density decays slowly.
        register_amn_ansatz(
            11,
            Arc::new(|x: RealVec3| SpinorC2::real((1.0 + x.norm_sqr()).powf(-0.25), 0.0)),
        )
        .unwrap();
        // |A| = c ⟨x⟩^{-2} / |ψ|² · |ψ|² = c⟨x⟩^{-2}: still SU.
        let rep = classify_decay_default(&PotentialSpec::amn(11, 1.0).unwrap()).unwrap();
        assert!(rep.in_su);
        let slow = PotentialSpec::Sampled(Arc::new(SampledPotential {
            field: VectorField::new(
                Grid3D::new(8, 4.0).unwrap(),
                [vec![1.0; 512], vec![0.0; 512], vec![0.0; 512]],
            ),
            source: None,
        }));
        let rep = classify_decay(&slow, &[1.0, 2.0, 3.0], &directions_26()).unwrap();
        assert!(!rep.in_su && !rep.in_e && !rep.in_be);
        assert!(rep.rho_fit.abs() < 1e-12);
    }

    #[test]
    fn json_forms() {
        let dir = tempfile::tempdir().unwrap();
        let v = serde_json::json!({"variant": "loss_yau", "phi0": [[1.0, 0.0], [0.0, 0.0]]});
        let p = PotentialSpec::from_json(&v, dir.path()).unwrap();
        assert!(matches!(p, PotentialSpec::LossYau { .. }));
        let s = PotentialSpec::scaled(0.5, p).unwrap();
        let back = s.to_json(dir.path(), "pot").unwrap();
        assert_eq!(back["variant"], "scaled");
        assert_eq!(back["inner"]["variant"], "loss_yau");
        let bad = serde_json::json!({"variant": "loss_yau", "phi0": [[1.0, 0.0], [1.0, 0.0]]});
        assert!(PotentialSpec::from_json(&bad, dir.path()).is_err());
        assert!(PotentialSpec::from_json_str("{\"variant\": \"nope\"}", dir.path()).is_err());
    }

    #[test]
    fn sampled_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid3D::new(8, 3.0).unwrap();
        let field = crate::grid::sample_potential(&ly(), &grid).unwrap();
        let s = PotentialSpec::sampled(field);
        let v = s.to_json(dir.path(), "a").unwrap();
        let back = PotentialSpec::from_json(&v, dir.path()).unwrap();
        let x = grid.node(grid.index(2, 5, 1));
        assert_eq!(
            eval_potential(&back, x).unwrap(),
            eval_potential(&s, x).unwrap()
        );
        assert!(matches!(
            eval_potential(&back, RealVec3::new(4.0, 0.0, 0.0)),
            Err(DtlError::Domain(_))
        ));
    }
}
