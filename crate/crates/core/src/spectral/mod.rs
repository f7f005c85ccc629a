//! Eigenprobes of the discretized operators.
//!
//! [`eigs_near`] runs shift-invert Lanczos with full reorthogonalization.
//! Each application of `(Op − σ)⁻¹` is a preconditioned CG solve on a squared
//! operator; for `H_A` the 4-spinor system is first reduced to a 2-spinor one
//! through `H² = T² + m²`, which keeps the inner solves well conditioned at
//! the thresholds `±m`. For targets in the closed gap `[−m, m]` the eigenvalues
//! nearest the target sit in the threshold cluster, where Lanczos on
//! `(H − σ)⁻¹` separates them poorly; there the eigenpairs of `T` nearest 0
//! are found instead and lifted through `σ(H) = {±√(m² + μ²) : μ ∈ σ(T)}`,
//! with residuals recomputed on `H`.

mod decay;
mod lanczos;
mod scans;
mod weyl;

pub use decay::{decay_fit, decay_fit_field, DecayFit, DecayVerdict, DECAY_DELTA, NOISE_FLOOR};
pub use scans::{
    coupling_scan, gap_scan, gap_scan_uniform, CouplingPoint, CouplingScan, GapPoint, GapScan,
    GAP_EDGE_EXCLUSION,
};
pub use weyl::{build_weyl_quasimode, weyl_coefficients, WeylQuasimode};

use serde::{Deserialize, Serialize};

use crate::error::{DtlError, Result};
use crate::grid::{Field, Grid3D, LinearOp, OperatorHandle, OperatorKind};
use crate::C64;
use lanczos::{lanczos_locked, LanczosOutcome, LanczosParams, ShiftInvert};

/// Solver controls for [`eigs_near`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub count: usize,
    /// Krylov dimension per Lanczos run.
    pub max_dim: usize,
    /// Relative residual of each inner CG solve.
    pub inner_tol: f64,
    pub max_inner_iterations: usize,
    /// Ritz-residual stopping tolerance relative to `|θ|`.
    pub ritz_tol: f64,
    /// Restarts from the best Ritz vector after an unconverged run.
    pub max_restarts: usize,
    pub seed: u64,
    /// Eigenvalues with `|λ − target|` at most this count towards the kernel;
    /// defaults to [`kernel_threshold`] of the grid.
    pub kernel_threshold: Option<f64>,
    /// Work on `P·Op·P` with constant spinors removed. `None` deflates when
    /// `A ≢ 0` lifts the constants by no more than the kernel threshold.
    pub deflate_constants: Option<bool>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            count: 1,
            max_dim: 40,
            inner_tol: 1e-8,
            max_inner_iterations: 5000,
            ritz_tol: 1e-8,
            max_restarts: 2,
            seed: 0,
            kernel_threshold: None,
            deflate_constants: None,
        }
    }
}

/// Kernel threshold `10·C·L⁻¹` with `C = 10⁻²`: the periodization budget of
/// the `r⁻²` tails, `5·10⁻³` on the default `L = 20` box.
pub fn kernel_threshold(grid: &Grid3D) -> f64 {
    0.1 / grid.half_width()
}

/// Offset added to the target so the shifted operator is never exactly
/// singular on a lattice eigenvalue.
pub const SHIFT_OFFSET: f64 = 1e-7;

/// Overlap with constant spinors above which a near-kernel eigenvector of
/// `T_A` is attributed to the torus `k = 0` mode.
pub const CONSTANT_OVERLAP: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub operator: OperatorKind,
    pub grid_n: usize,
    pub box_l: f64,
    pub mass: f64,
    pub target: f64,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub kernel_threshold: f64,
    pub kernel_dim_estimate: usize,
    /// Constant-spinor directions left out of `kernel_dim_estimate`: the
    /// deflated dimension, or near-kernel eigenvectors dominated by constants.
    pub excluded_constant_modes: usize,
    pub deflated_constants: bool,
    /// `|Ā|`, the splitting of the constant spinors by the box-mean potential.
    pub constant_lift: f64,
    /// Relative norm of the off block (`‖lower‖/‖f‖` at `+m` side
    /// eigenvalues, `‖upper‖/‖f‖` at `−m` side) for 4-spinor operators.
    pub off_block_norms: Option<Vec<f64>>,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// An [`EigenReport`] with the normalized eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub report: EigenReport,
    pub vectors: Vec<Field>,
}

fn inner_damping(grid: &Grid3D) -> f64 {
    let k1 = std::f64::consts::PI / grid.half_width();
    0.25 * k1 * k1
}

/// The `count` eigenvalues of `op` nearest `target`.
pub fn eigs_near(op: &OperatorHandle, target: f64, opts: &EigenOptions) -> Result<EigenResult> {
    if opts.count == 0 {
        return Err(DtlError::Precondition("count must be >= 1".into()));
    }
    if !target.is_finite() {
        return Err(DtlError::Precondition("target must be finite".into()));
    }
    if opts.max_dim < 2 {
        return Err(DtlError::Precondition("max_dim must be >= 2".into()));
    }
    let grid = *op.grid();
    let dim = op.dim();
    if opts.count > dim {
        return Err(DtlError::Precondition(format!(
            "count {} exceeds dimension {dim}",
            opts.count
        )));
    }
    let mass = op.mass();
    // Step into the gap at the thresholds so the Dirac reduction stays definite.
    let shift = match op.kind() {
        OperatorKind::Dirac
            if target.abs() >= mass && mass > 0.0 && (target.abs() - mass).abs() < 1e-12 =>
        {
            target - SHIFT_OFFSET * target.signum()
        }
        _ => target + SHIFT_OFFSET,
    };
    let threshold = opts
        .kernel_threshold
        .unwrap_or_else(|| kernel_threshold(&grid));
    let nonzero_potential = op
        .potential()
        .is_some_and(|a| a.components().iter().any(|c| c.iter().any(|v| *v != 0.0)));
    let constant_lift = op.constant_lift();
    let deflate = opts
        .deflate_constants
        .unwrap_or(nonzero_potential && constant_lift <= threshold)
        && op.kind() != OperatorKind::SigmaD;
    let op_d;
    let op = if deflate && !op.constants_deflated() {
        op_d = op.with_constants_deflated();
        &op_d
    } else {
        op
    };
    let rank = op.kind().rank().components();
    let gap_target = op.kind() == OperatorKind::Dirac && target.abs() <= mass;
    let (pairs, out) = if gap_target {
        let t = op.with_kind(OperatorKind::WeylDirac, 0.0)?;
        let (found, out) = shift_invert_pairs(&t, SHIFT_OFFSET, deflation_vectors(&t), opts);
        (lift_to_dirac(op, &found, target, opts.count), out)
    } else {
        shift_invert_pairs(op, shift, deflation_vectors(op), opts)
    };

    let h3 = grid.cell_volume();
    let mut items: Vec<(f64, f64, Field)> = Vec::with_capacity(pairs.len());
    for (lambda, resid, mut v) in pairs {
        let s = 1.0 / h3.sqrt();
        v.iter_mut().for_each(|z| *z *= s);
        items.push((lambda, resid, Field::from_data(grid, op.kind().rank(), v)?));
    }
    items.sort_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs()));

    let exclude_constants =
        op.kind() == OperatorKind::WeylDirac && nonzero_potential && !op.constants_deflated();
    let mut kernel = 0;
    let mut excluded = if op.constants_deflated() { rank } else { 0 };
    for (lambda, _, f) in &items {
        if (lambda - target).abs() <= threshold {
            if exclude_constants && constant_overlap(f) > CONSTANT_OVERLAP {
                excluded += 1;
            } else {
                kernel += 1;
            }
        }
    }
    let off_block_norms = match op.kind() {
        OperatorKind::Dirac | OperatorKind::DiracSquared => Some(
            items
                .iter()
                .map(|(lambda, _, f)| off_block_norm(f, *lambda >= 0.0))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let report = EigenReport {
        operator: op.kind(),
        grid_n: grid.n(),
        box_l: grid.half_width(),
        mass,
        target,
        eigenvalues: items.iter().map(|i| i.0).collect(),
        residuals: items.iter().map(|i| i.1).collect(),
        kernel_threshold: threshold,
        kernel_dim_estimate: kernel,
        excluded_constant_modes: excluded,
        deflated_constants: op.constants_deflated(),
        constant_lift,
        off_block_norms,
        iterations: out.outer_iterations,
        inner_iterations: out.inner_iterations,
        converged: out.converged,
        seed: opts.seed,
    };
    Ok(EigenResult {
        report,
        vectors: items.into_iter().map(|i| i.2).collect(),
    })
}

/// Normalized per-component constant vectors when `op` works on `P·Op·P`.
fn deflation_vectors(op: &OperatorHandle) -> Vec<Vec<C64>> {
    if !op.constants_deflated() {
        return Vec::new();
    }
    let n = op.grid().len();
    let dim = op.dim();
    let s = 1.0 / (n as f64).sqrt();
    (0..op.kind().rank().components())
        .map(|c| {
            let mut v = vec![C64::default(); dim];
            v[c * n..(c + 1) * n]
                .iter_mut()
                .for_each(|z| *z = C64::new(s, 0.0));
            v
        })
        .collect()
}

type Pair = (f64, f64, Vec<C64>);

/// Shift-invert Lanczos on `op`; unit eigenvectors with their Rayleigh
/// quotients and residuals `‖(op − λ)v‖`.
fn shift_invert_pairs(
    op: &OperatorHandle,
    shift: f64,
    deflation: Vec<Vec<C64>>,
    opts: &EigenOptions,
) -> (Vec<Pair>, LanczosOutcome) {
    let si = ShiftInvert::new(
        op,
        shift,
        inner_damping(op.grid()),
        opts.inner_tol,
        opts.max_inner_iterations,
    );
    let params = LanczosParams {
        count: opts.count,
        max_dim: opts.max_dim,
        max_restarts: opts.max_restarts,
        ritz_tol: opts.ritz_tol,
        seed: opts.seed,
        deflation,
    };
    let mut out = lanczos_locked(op.dim(), |b, st| si.apply(b, st), &params);
    let pairs = std::mem::take(&mut out.pairs)
        .into_iter()
        .map(|p| {
            let (lambda, resid) = rayleigh(op, &p.vector);
            (lambda, resid, p.vector)
        })
        .collect();
    (pairs, out)
}

fn rayleigh(op: &OperatorHandle, v: &[C64]) -> (f64, f64) {
    let mut ov = vec![C64::default(); v.len()];
    op.apply_into(v, &mut ov);
    let lambda = lanczos::dot(v, &ov).re;
    lanczos::axpy(C64::new(-lambda, 0.0), v, &mut ov);
    (lambda, lanczos::norm(&ov))
}

/// Eigenpairs of `H = [[m, T], [T, −m]]` from eigenpairs `T v = μ v`: each
/// `μ` gives `λ = ±√(m² + μ²)` with eigenvector `(a v; b v)`. The `count`
/// nearest `target` are kept; residuals are recomputed with `h` itself.
fn lift_to_dirac(h: &OperatorHandle, found: &[Pair], target: f64, count: usize) -> Vec<Pair> {
    let m = h.mass();
    let mut lifted: Vec<(f64, &[C64], f64, f64)> = Vec::new();
    for (mu, _, v) in found {
        let e = (m * m + mu * mu).sqrt();
        for lambda in [e, -e] {
            // Kernel of [[m − λ, μ], [μ, −m − λ]], from the row that cannot vanish.
            let (a, b) = if lambda > 0.0 {
                (lambda + m, *mu)
            } else {
                (*mu, lambda - m)
            };
            let r = a.hypot(b);
            lifted.push((lambda, v.as_slice(), a / r, b / r));
        }
    }
    lifted.sort_by(|x, y| (x.0 - target).abs().total_cmp(&(y.0 - target).abs()));
    lifted
        .into_iter()
        .take(count)
        .map(|(_, v, a, b)| {
            let mut f = Vec::with_capacity(2 * v.len());
            f.extend(v.iter().map(|z| z * a));
            f.extend(v.iter().map(|z| z * b));
            let (lambda, resid) = rayleigh(h, &f);
            (lambda, resid, f)
        })
        .collect()
}

/// `‖P₀ f‖² / ‖f‖²` with `P₀` the projection onto constant spinors.
pub fn constant_overlap(f: &Field) -> f64 {
    let n = f.grid().len();
    let total: f64 = f.data().iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut proj = 0.0;
    for c in 0..f.rank().components() {
        let s: C64 = f.component(c).iter().sum();
        proj += s.norm_sqr() / n as f64;
    }
    proj / total
}

/// Relative norm of the lower block (`upper_expected`) or of the upper block.
pub fn off_block_norm(f: &Field, upper_expected: bool) -> Result<f64> {
    let off = if upper_expected {
        f.lower()?
    } else {
        f.upper()?
    };
    let total = f.norm();
    if total == 0.0 {
        return Err(DtlError::ZeroField);
    }
    Ok(off.norm() / total)
}

/// Largest `|⟨u, v⟩|`-aligned difference `min_φ ‖u − e^{iφ} v‖` between two
/// normalized fields.
pub fn phase_aligned_distance(u: &Field, v: &Field) -> Result<f64> {
    let un = u.normalized()?;
    let vn = v.normalized()?;
    let c = vn.inner(&un)?;
    let phase = if c.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        c / c.norm()
    };
    Ok(un.sub(&vn.scaled(phase))?.norm())
}
