//! Closed-form zero modes, their lift to `±m` threshold modes, and the
//! asymptotic limit `u±(ω) = lim r² f(rω)`.
//!
//! The limit is computed by quadrature from
//!
//! ```text
//! u(ω) = (i/4π) ∫ { (ω·A(y)) I₂ + iσ·(ω × A(y)) } φ(y) dy
//! ```
//!
//! and, for the Loss–Yau pair, compared with the closed form `i(σ·ω)φ₀`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{DtlError, Result};
use crate::exec;
use crate::grid::{Field, Grid3D};
use crate::potentials::{classify_decay_default, eval_potential, PotentialSpec, SpinorFn};
use crate::quadrature::{RadialPanels, SphereRule};
use crate::spinor::{pauli, sigma_dot};
use crate::{RealVec3, SpinorC2, SpinorC4, C64};

const I: C64 = C64::new(0.0, 1.0);

/// A zero mode of `σ·(D − A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ZeroModeSpec {
    LossYau { phi0: SpinorC2 },
    Registered { id: String },
}

fn mode_registry() -> &'static RwLock<HashMap<String, SpinorFn>> {
    static REG: OnceLock<RwLock<HashMap<String, SpinorFn>>> = OnceLock::new();
    REG.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Register an external zero-mode evaluator under `id`.
pub fn register_zero_mode(id: impl Into<String>, eval: SpinorFn) {
    mode_registry()
        .write()
        .expect("mode registry poisoned")
        .insert(id.into(), eval);
}

impl ZeroModeSpec {
    pub fn loss_yau(phi0: SpinorC2) -> Result<Self> {
        let n = phi0.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(DtlError::NonUnitSpinor(n));
        }
        Ok(ZeroModeSpec::LossYau { phi0 })
    }

    /// The known zero mode carried by a potential, if any.
    pub fn for_potential(pot: &PotentialSpec) -> Option<Self> {
        pot.loss_yau_spinor()
            .map(|phi0| ZeroModeSpec::LossYau { phi0 })
    }

    /// Whether `σ·(D − A)φ = 0` is known to hold for this pair.
    pub fn matches_potential(&self, pot: &PotentialSpec) -> bool {
        match self {
            ZeroModeSpec::LossYau { phi0 } => pot.loss_yau_spinor() == Some(*phi0),
            ZeroModeSpec::Registered { .. } => false,
        }
    }

    fn evaluator(&self) -> Result<SpinorFn> {
        match self {
            ZeroModeSpec::LossYau { phi0 } => {
                let p = *phi0;
                Ok(std::sync::Arc::new(move |x| loss_yau_zero_mode(&p, x)))
            }
            ZeroModeSpec::Registered { id } => mode_registry()
                .read()
                .expect("mode registry poisoned")
                .get(id)
                .cloned()
                .ok_or_else(|| {
                    DtlError::UnsupportedVariant(format!("no zero mode registered as {id:?}"))
                }),
        }
    }
}

/// `φ_LY(x) = ⟨x⟩⁻³ (I₂ + iσ·x) φ₀`.
pub fn loss_yau_zero_mode(phi0: &SpinorC2, x: RealVec3) -> SpinorC2 {
    let g = (1.0 + x.norm_sqr()).powf(-1.5);
    let s = sigma_dot(x).apply(phi0);
    (*phi0 + s.scale(I)) * g
}

/// `∂_j φ_LY(x)` for `j = 0, 1, 2`, differentiated by hand.
pub fn loss_yau_zero_mode_gradient(phi0: &SpinorC2, x: RealVec3) -> [SpinorC2; 3] {
    let b2 = 1.0 + x.norm_sqr();
    let g = b2.powf(-1.5);
    let dg = -3.0 * b2.powf(-2.5);
    let v = *phi0 + sigma_dot(x).apply(phi0).scale(I);
    std::array::from_fn(|j| {
        let sj = pauli(j + 1).expect("index in range").apply(phi0).scale(I);
        v * (dg * x.0[j]) + sj * g
    })
}

/// `σ·(D − A_LY)φ_LY` at `x`, from the closed-form gradient.
pub fn loss_yau_residual(phi0: &SpinorC2, x: RealVec3) -> SpinorC2 {
    let phi = loss_yau_zero_mode(phi0, x);
    let grad = loss_yau_zero_mode_gradient(phi0, x);
    let a = crate::potentials::loss_yau_potential(phi0, x);
    let mut out = SpinorC2::ZERO;
    for j in 0..3 {
        // (D_j − A_j)φ = −i ∂_j φ − A_j φ
        let t = grad[j].scale(-I) - phi * a.0[j];
        out = out + pauli(j + 1).expect("index in range").apply(&t);
    }
    out
}

pub fn eval_zero_mode(spec: &ZeroModeSpec, x: RealVec3) -> Result<SpinorC2> {
    match spec {
        ZeroModeSpec::LossYau { phi0 } => Ok(loss_yau_zero_mode(phi0, x)),
        ZeroModeSpec::Registered { .. } => Ok(spec.evaluator()?(x)),
    }
}

/// Sample a zero mode on a grid.
pub fn sample_zero_mode(spec: &ZeroModeSpec, grid: Grid3D) -> Result<Field> {
    let f = spec.evaluator()?;
    Field::sample2(grid, move |x| f(x))
}

/// Which threshold a mode sits at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdSign {
    #[serde(rename = "+m")]
    Plus,
    #[serde(rename = "-m")]
    Minus,
}

impl ThresholdSign {
    pub fn factor(self) -> f64 {
        match self {
            ThresholdSign::Plus => 1.0,
            ThresholdSign::Minus => -1.0,
        }
    }
}

/// `ᵗ(φ, 0)` at `+m` or `ᵗ(0, φ)` at `−m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMode {
    pub sign: ThresholdSign,
    pub source: ZeroModeSpec,
    pub mass: f64,
}

pub fn lift_to_threshold(
    spec: &ZeroModeSpec,
    sign: ThresholdSign,
    mass: f64,
) -> Result<ThresholdMode> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(DtlError::Precondition(format!(
            "mass must be > 0, got {mass}"
        )));
    }
    spec.evaluator()?;
    Ok(ThresholdMode {
        sign,
        source: spec.clone(),
        mass,
    })
}

impl ThresholdMode {
    fn place(&self, p: SpinorC2) -> SpinorC4 {
        match self.sign {
            ThresholdSign::Plus => SpinorC4::new(p, SpinorC2::ZERO),
            ThresholdSign::Minus => SpinorC4::new(SpinorC2::ZERO, p),
        }
    }

    pub fn eval(&self, x: RealVec3) -> Result<SpinorC4> {
        Ok(self.place(eval_zero_mode(&self.source, x)?))
    }

    /// The value its 2-spinor block should approach, `(u, 0)` or `(0, u)`.
    pub fn lift_spinor(&self, u: SpinorC2) -> SpinorC4 {
        self.place(u)
    }

    pub fn sample(&self, grid: Grid3D) -> Result<Field> {
        let z = sample_zero_mode(&self.source, grid)?;
        let zero = Field::zeros(grid, crate::grid::Rank::Two);
        match self.sign {
            ThresholdSign::Plus => Field::from_blocks(&z, &zero),
            ThresholdSign::Minus => Field::from_blocks(&zero, &z),
        }
    }
}

/// Radial × angular quadrature layout for the limit integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureParams {
    /// Innermost truncation radius; the integral is also taken to `2R`, `4R`.
    pub r_max: f64,
    pub radial_order: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Accuracy error is raised if the extrapolation error estimate exceeds this.
    pub tol: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        QuadratureParams {
            r_max: 200.0,
            radial_order: 16,
            n_theta: 24,
            n_phi: 48,
            tol: 1e-3,
        }
    }
}

/// `M_j = (i/4π) ∫ {A_j I₂ + iσ·(e_j × A)} φ dy`, so that `u(ω) = Σ ω_j M_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitMoments {
    pub moments: [SpinorC2; 3],
    pub error_estimate: f64,
}

impl LimitMoments {
    pub fn at(&self, omega: RealVec3) -> SpinorC2 {
        (0..3).fold(SpinorC2::ZERO, |acc, j| acc + self.moments[j] * omega.0[j])
    }
}

fn ball_moments(
    phi: &SpinorFn,
    pot: &PotentialSpec,
    r_max: f64,
    q: &QuadratureParams,
    sphere: &SphereRule,
) -> Result<[SpinorC2; 3]> {
    let panels = RadialPanels {
        first: 0.5,
        order: q.radial_order,
    };
    let edges = panels.edges(r_max);
    let shells: Vec<(f64, f64)> = edges
        .windows(2)
        .flat_map(|w| panels.panel_nodes(w[0], w[1]))
        .collect();
    let per_shell = exec::map_collect(shells.len(), |s| -> Result<[SpinorC2; 3]> {
        let (r, wr) = shells[s];
        let mut acc = [SpinorC2::ZERO; 3];
        for (w, wq) in &sphere.points {
            let y = *w * r;
            let a = eval_potential(pot, y)?;
            let p = phi(y);
            for (j, m) in acc.iter_mut().enumerate() {
                let mut e = RealVec3::ZERO;
                e.0[j] = 1.0;
                let cross = sigma_dot(e.cross(a)).apply(&p).scale(I);
                *m = *m + (p * a.0[j] + cross) * (wq * r * r * wr);
            }
        }
        Ok(acc)
    });
    let per_shell: Vec<[SpinorC2; 3]> = per_shell.into_iter().collect::<Result<_>>()?;
    let pre = I / (4.0 * PI);
    Ok(std::array::from_fn(|j| {
        let c0: Vec<C64> = per_shell.iter().map(|m| m[j].c0).collect();
        let c1: Vec<C64> = per_shell.iter().map(|m| m[j].c1).collect();
        SpinorC2::new(
            exec::pairwise_sum_c(&c0) * pre,
            exec::pairwise_sum_c(&c1) * pre,
        )
    }))
}

/// The three limit moments, truncated at `R, 2R, 4R` and Richardson
/// extrapolated in the tail exponent `ρ − 1` implied by the decay fit.
pub fn limit_moments(
    spec: &ZeroModeSpec,
    pot: &PotentialSpec,
    q: &QuadratureParams,
) -> Result<LimitMoments> {
    if pot.is_identically_zero() {
        return Ok(LimitMoments {
            moments: [SpinorC2::ZERO; 3],
            error_estimate: 0.0,
        });
    }
    let class = classify_decay_default(pot)?;
    if !class.in_su {
        return Err(DtlError::Hypothesis(format!(
            "potential decay exponent {:.3} does not satisfy rho > 1",
            class.rho_fit
        )));
    }
    let phi = spec.evaluator()?;
    let sphere = SphereRule::product(q.n_theta, q.n_phi);
    let m1 = ball_moments(&phi, pot, q.r_max, q, &sphere)?;
    let m2 = ball_moments(&phi, pot, 2.0 * q.r_max, q, &sphere)?;
    let m4 = ball_moments(&phi, pot, 4.0 * q.r_max, q, &sphere)?;
    // The mode decays like r⁻², so the integrand tail is ~ r^{-(ρ+2)}·r².
    let p = class.rho_fit - 1.0;
    let f = 2f64.powf(p);
    let rich = |a: &SpinorC2, b: &SpinorC2| (*b * f - *a) * (1.0 / (f - 1.0));
    let mut moments = [SpinorC2::ZERO; 3];
    let mut err: f64 = 0.0;
    for j in 0..3 {
        let lo = rich(&m1[j], &m2[j]);
        let hi = rich(&m2[j], &m4[j]);
        err = err.max((hi - lo).norm());
        moments[j] = hi;
    }
    if !err.is_finite() || err > q.tol {
        return Err(DtlError::Accuracy(format!(
            "tail extrapolation error {err:.3e} exceeds tolerance {:.1e}",
            q.tol
        )));
    }
    Ok(LimitMoments {
        moments,
        error_estimate: err,
    })
}

/// `u(ω)` by quadrature, with the estimated quadrature error.
pub fn asymptotic_limit_quadrature(
    spec: &ZeroModeSpec,
    pot: &PotentialSpec,
    omega: RealVec3,
    q: &QuadratureParams,
) -> Result<(SpinorC2, f64)> {
    check_unit_direction(omega)?;
    let m = limit_moments(spec, pot, q)?;
    Ok((m.at(omega), m.error_estimate))
}

/// `i(σ·ω)φ₀`.
pub fn loss_yau_limit_closed_form(phi0: &SpinorC2, omega: RealVec3) -> SpinorC2 {
    sigma_dot(omega).apply(phi0).scale(I)
}

fn check_unit_direction(omega: RealVec3) -> Result<()> {
    if (omega.norm() - 1.0).abs() > 1e-9 {
        return Err(DtlError::Precondition(format!(
            "direction {:?} is not a unit vector",
            omega.0
        )));
    }
    Ok(())
}

/// Tabulated convergence of `r² f(rω)` to its limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub omega_samples: Vec<RealVec3>,
    pub u_quadrature: Vec<SpinorC2>,
    pub u_closed: Option<Vec<SpinorC2>>,
    /// `sup_ω |u_quadrature − u_closed|`, or 0 when no closed form exists.
    pub sup_deviation: f64,
    pub quadrature_error: f64,
    /// `(r, sup_ω |r² f(rω) − u(ω)|)` against the quadrature limit.
    pub convergence_table: Vec<(f64, f64)>,
    /// Log-log slope of the convergence table.
    pub convergence_slope: f64,
    /// `sup_ω |r² |f(rω)| − |u(ω)||` at the largest radius.
    pub modulus_deviation: f64,
    /// False when the mode is not known to be a zero mode of this potential.
    pub hypothesis_certified: bool,
}

impl AsymptoticReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("r,sup_deviation\n");
        for (r, d) in &self.convergence_table {
            let _ = writeln!(s, "{r},{d:e}");
        }
        s
    }
}

/// Compare `r² f(rω)` with `ᵗ(u⁺, 0)` (or `ᵗ(0, u⁻)`) over radii and directions.
pub fn asymptotic_convergence(
    mode: &ThresholdMode,
    pot: &PotentialSpec,
    radii: &[f64],
    omegas: &[RealVec3],
    q: &QuadratureParams,
) -> Result<AsymptoticReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(DtlError::Precondition(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    if omegas.is_empty() {
        return Err(DtlError::Precondition(
            "at least one direction required".into(),
        ));
    }
    for w in omegas {
        check_unit_direction(*w)?;
    }
    if let ZeroModeSpec::LossYau { .. } = mode.source {
        if !mode.source.matches_potential(pot) && !pot.is_identically_zero() {
            return Err(DtlError::Precondition(format!(
                "Loss–Yau mode is not the zero mode of {}",
                pot.label()
            )));
        }
    }
    let moments = limit_moments(&mode.source, pot, q)?;
    let u_quadrature: Vec<SpinorC2> = omegas.iter().map(|w| moments.at(*w)).collect();
    let u_closed = match &mode.source {
        ZeroModeSpec::LossYau { phi0 } => Some(
            omegas
                .iter()
                .map(|w| loss_yau_limit_closed_form(phi0, *w))
                .collect::<Vec<_>>(),
        ),
        ZeroModeSpec::Registered { .. } => None,
    };
    let sup_deviation = u_closed
        .as_ref()
        .map(|c| {
            c.iter()
                .zip(&u_quadrature)
                .map(|(a, b)| (*a - *b).norm())
                .fold(0.0, f64::max)
        })
        .unwrap_or(0.0);

    let mut table = Vec::with_capacity(radii.len());
    let mut modulus_deviation = 0.0;
    for &r in radii {
        let mut sup: f64 = 0.0;
        let mut modsup: f64 = 0.0;
        for (w, u) in omegas.iter().zip(&u_quadrature) {
            let f = mode.eval(*w * r)?;
            let target = mode.lift_spinor(*u);
            let d = SpinorC4::new(
                f.upper * (r * r) - target.upper,
                f.lower * (r * r) - target.lower,
            );
            sup = sup.max(d.norm());
            modsup = modsup.max((f.norm() * r * r - u.norm()).abs());
        }
        table.push((r, sup));
        modulus_deviation = modsup;
    }
    let convergence_slope = if table.len() >= 2 && table.iter().all(|t| t.1 > 0.0) {
        crate::potentials::least_squares(table.iter().map(|(r, d)| (r.ln(), d.ln()))).0
    } else {
        f64::NAN
    };
    Ok(AsymptoticReport {
        omega_samples: omegas.to_vec(),
        u_quadrature,
        u_closed,
        sup_deviation,
        quadrature_error: moments.error_estimate,
        convergence_table: table,
        convergence_slope,
        modulus_deviation,
        hypothesis_certified: mode.source.matches_potential(pot),
    })
}

/// `‖f‖_{L²(ℝ³)}` by radial panels to `r_max` and a power-law tail whose
/// exponent is read off the outermost two panels.
pub fn l2_norm_radial<F>(f: F, r_max: f64) -> f64
where
    F: Fn(RealVec3) -> f64 + Sync + Send,
{
    let panels = RadialPanels::default();
    let sphere = SphereRule::product(16, 32);
    let edges = panels.edges(r_max);
    let nodes: Vec<(f64, f64)> = edges
        .windows(2)
        .flat_map(|w| panels.panel_nodes(w[0], w[1]))
        .collect();
    let shell = |r: f64| {
        sphere
            .points
            .iter()
            .map(|(w, q)| q * f(*w * r))
            .sum::<f64>()
    };
    let vals = exec::map_collect(nodes.len(), |i| {
        let (r, wr) = nodes[i];
        shell(r) * r * r * wr
    });
    let ball = exec::pairwise_sum(&vals);
    let (s1, s2) = (shell(0.5 * r_max), shell(r_max));
    let mut tail = 0.0;
    if s1 > 0.0 && s2 > 0.0 {
        let decay = -(s2 / s1).ln() / 2f64.ln();
        if decay > 3.0 {
            tail = s2 * r_max.powi(3) / (decay - 3.0);
        }
    }
    (ball + tail).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e1() -> SpinorC2 {
        SpinorC2::real(1.0, 0.0)
    }

    #[test]
    fn zero_mode_examples() {
        let s = ZeroModeSpec::loss_yau(e1()).unwrap();
        assert_eq!(eval_zero_mode(&s, RealVec3::ZERO).unwrap(), e1());
        let v = eval_zero_mode(&s, RealVec3::new(0.0, 0.0, 1.0)).unwrap();
        let c = 2f64.powf(-1.5);
        assert!((v - SpinorC2::new(C64::new(c, c), C64::default())).norm() < 1e-15);
        assert!((v.norm() - 0.5).abs() < 1e-15);
        let w = eval_zero_mode(&s, RealVec3::new(1.0, 1.0, 1.0)).unwrap();
        assert!((w.norm() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let phi0 = SpinorC2::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let x = RealVec3::new(0.3, -1.2, 0.7);
        let g = loss_yau_zero_mode_gradient(&phi0, x);
        let h = 1e-5;
        for j in 0..3 {
            let mut d = RealVec3::ZERO;
            d.0[j] = h;
            let fd =
                (loss_yau_zero_mode(&phi0, x + d) - loss_yau_zero_mode(&phi0, x - d)) * (0.5 / h);
            assert!((fd - g[j]).norm() < 1e-9);
        }
    }

    #[test]
    fn analytic_residual_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi0 = SpinorC2::new(C64::new(0.0, 1.0), C64::default());
        for _ in 0..200 {
            let x = RealVec3::new(
                rng.gen_range(-8.0..8.0),
                rng.gen_range(-8.0..8.0),
                rng.gen_range(-8.0..8.0),
            );
            assert!(loss_yau_residual(&phi0, x).norm() < 1e-12);
        }
    }

    #[test]
    fn lift_places_blocks() {
        let s = ZeroModeSpec::loss_yau(e1()).unwrap();
        let x = RealVec3::new(0.4, 0.1, -2.0);
        let p = lift_to_threshold(&s, ThresholdSign::Plus, 1.0)
            .unwrap()
            .eval(x)
            .unwrap();
        let m = lift_to_threshold(&s, ThresholdSign::Minus, 1.0)
            .unwrap()
            .eval(x)
            .unwrap();
        let phi = loss_yau_zero_mode(&e1(), x);
        assert_eq!((p.upper, p.lower), (phi, SpinorC2::ZERO));
        assert_eq!((m.upper, m.lower), (SpinorC2::ZERO, phi));
        let a = lift_to_threshold(&s, ThresholdSign::Plus, 7.0)
            .unwrap()
            .eval(x)
            .unwrap();
        assert_eq!(a, p);
        assert!(lift_to_threshold(&s, ThresholdSign::Plus, 0.0).is_err());
    }

    #[test]
    fn unregistered_mode_errors() {
        let s = ZeroModeSpec::Registered {
            id: "absent".into(),
        };
        assert!(matches!(
            eval_zero_mode(&s, RealVec3::ZERO),
            Err(DtlError::UnsupportedVariant(_))
        ));
        register_zero_mode("flat", std::sync::Arc::new(|_| SpinorC2::real(0.0, 1.0)));
        let f = ZeroModeSpec::Registered { id: "flat".into() };
        assert_eq!(
            eval_zero_mode(&f, RealVec3::new(5.0, 0.0, 0.0)).unwrap(),
            SpinorC2::real(0.0, 1.0)
        );
    }

    #[test]
    fn l2_norm_is_pi() {
        let n = l2_norm_radial(|x| loss_yau_zero_mode(&e1(), x).norm_sqr(), 1e3);
        assert!((n - PI).abs() < 1e-3, "{n}");
    }

    #[test]
    fn zero_potential_limit_vanishes() {
        let s = ZeroModeSpec::loss_yau(e1()).unwrap();
        let z = PotentialSpec::scaled(0.0, PotentialSpec::loss_yau_default()).unwrap();
        let (u, e) = asymptotic_limit_quadrature(
            &s,
            &z,
            RealVec3::new(0.0, 0.0, 1.0),
            &QuadratureParams::default(),
        )
        .unwrap();
        assert_eq!((u, e), (SpinorC2::ZERO, 0.0));
    }
}
