use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::{euclid_norm_sqr, Field, Rank};
use super::gauge::VectorField;
use super::Grid3D;
use crate::error::{DtlError, Result};
use crate::exec;
use crate::fft::Fft3;
use crate::potentials::{eval_potential, PotentialSpec};
use crate::spinor::sigma_dot_apply;
use crate::C64;

/// Matrix-free Hermitian operator on flat component-planar vectors.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[C64], y: &mut [C64]);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `σ·D` on 2-spinors.
    SigmaD,
    /// `T_A = σ·(D − A)` on 2-spinors.
    WeylDirac,
    /// `H_A = α·(D − A) + mβ` on 4-spinors.
    Dirac,
    /// `H_A²`.
    DiracSquared,
}

impl OperatorKind {
    pub fn rank(self) -> Rank {
        match self {
            OperatorKind::SigmaD | OperatorKind::WeylDirac => Rank::Two,
            OperatorKind::Dirac | OperatorKind::DiracSquared => Rank::Four,
        }
    }
}

/// A discretized operator bound to a grid, an optional sampled potential and
/// an optional mass. Immutable and shareable across threads.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    kind: OperatorKind,
    grid: Grid3D,
    potential: Option<Arc<VectorField>>,
    mass: f64,
    fft: Arc<Fft3>,
    k: Arc<Vec<f64>>,
    deflate: bool,
}

/// Sample `A` at every grid node.
pub fn sample_potential(spec: &PotentialSpec, grid: &Grid3D) -> Result<VectorField> {
    let vals = exec::map_collect(grid.len(), |idx| eval_potential(spec, grid.node(idx)));
    let mut comps = [
        vec![0.0; grid.len()],
        vec![0.0; grid.len()],
        vec![0.0; grid.len()],
    ];
    for (idx, v) in vals.into_iter().enumerate() {
        let v = v?;
        if !v.is_finite() {
            return Err(DtlError::NonFinite(format!(
                "potential at {:?}",
                grid.node(idx).0
            )));
        }
        for a in 0..3 {
            comps[a][idx] = v.0[a];
        }
    }
    Ok(VectorField::new(*grid, comps))
}

impl OperatorHandle {
    fn build(kind: OperatorKind, grid: Grid3D, potential: Option<VectorField>, mass: f64) -> Self {
        OperatorHandle {
            kind,
            grid,
            potential: potential.map(Arc::new),
            mass,
            fft: Arc::new(Fft3::new(grid.n())),
            k: Arc::new(grid.wavenumbers()),
            deflate: false,
        }
    }

    pub fn sigma_d(grid: Grid3D) -> Self {
        Self::build(OperatorKind::SigmaD, grid, None, 0.0)
    }

    pub fn weyl_dirac(grid: Grid3D, potential: &PotentialSpec) -> Result<Self> {
        let a = sample_potential(potential, &grid)?;
        Ok(Self::build(OperatorKind::WeylDirac, grid, Some(a), 0.0))
    }

    pub fn weyl_dirac_sampled(potential: VectorField) -> Self {
        let grid = *potential.grid();
        Self::build(OperatorKind::WeylDirac, grid, Some(potential), 0.0)
    }

    pub fn dirac(grid: Grid3D, potential: &PotentialSpec, mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let a = sample_potential(potential, &grid)?;
        Ok(Self::build(OperatorKind::Dirac, grid, Some(a), mass))
    }

    pub fn dirac_squared(grid: Grid3D, potential: &PotentialSpec, mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let a = sample_potential(potential, &grid)?;
        Ok(Self::build(OperatorKind::DiracSquared, grid, Some(a), mass))
    }

    /// Same discretized potential, different kind or mass. A mass of zero is
    /// permitted here for degenerate identity checks.
    pub fn with_kind(&self, kind: OperatorKind, mass: f64) -> Result<Self> {
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(DtlError::Precondition(format!(
                "mass must be >= 0, got {mass}"
            )));
        }
        if kind != OperatorKind::SigmaD && self.potential.is_none() {
            return Err(DtlError::Precondition(format!(
                "{kind:?} requires a potential"
            )));
        }
        Ok(OperatorHandle {
            kind,
            mass,
            ..self.clone()
        })
    }

    /// `P·Op·P` with `P` the orthogonal projection removing constant spinors
    /// (the torus `k = 0` mode).
    pub fn with_constants_deflated(&self) -> Self {
        OperatorHandle {
            deflate: true,
            ..self.clone()
        }
    }

    pub fn constants_deflated(&self) -> bool {
        self.deflate
    }

    /// `|Ā|` for the box mean `Ā` of the sampled potential: constant spinors
    /// span an invariant pair of `P₀ T_A P₀` with eigenvalues `±|Ā|`.
    pub fn constant_lift(&self) -> f64 {
        self.potential.as_ref().map_or(0.0, |a| {
            let n = self.grid.len() as f64;
            a.components()
                .iter()
                .map(|c| (exec::pairwise_sum(c) / n).powi(2))
                .sum::<f64>()
                .sqrt()
        })
    }

    fn project_out_constants(&self, y: &mut [C64]) {
        let n = self.grid.len();
        for c in y.chunks_mut(n) {
            let mean = exec::pairwise_sum_c(c) / n as f64;
            c.iter_mut().for_each(|z| *z -= mean);
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn potential(&self) -> Option<&VectorField> {
        self.potential.as_deref()
    }

    /// Apply to a field of matching grid and rank.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        let expected = self.kind.rank();
        if f.rank() != expected {
            return Err(DtlError::RankMismatch {
                expected: expected.components(),
                found: f.rank().components(),
            });
        }
        let mut out = vec![C64::default(); f.data().len()];
        self.apply_into(f.data(), &mut out);
        Field::from_data(self.grid, expected, out)
    }

    /// `y = (σ·k) x̂` transformed back, for a 2-spinor `x`.
    fn sigma_d_into(&self, x: &[C64], y: &mut [C64]) {
        let n = self.grid.len();
        y.copy_from_slice(x);
        {
            let (a, b) = y.split_at_mut(n);
            self.fft.forward(a);
            self.fft.forward(b);
        }
        self.fourier_multiply2(y, |kv, s| sigma_dot_apply(kv, s));
        let (a, b) = y.split_at_mut(n);
        self.fft.inverse(a);
        self.fft.inverse(b);
    }

    /// Apply a per-wavevector 2×2 map to a Fourier-space 2-spinor in place.
    fn fourier_multiply2<F>(&self, y: &mut [C64], f: F)
    where
        F: Fn([f64; 3], [C64; 2]) -> [C64; 2] + Sync + Send,
    {
        let n = self.grid.n();
        let len = self.grid.len();
        let slab = n * n;
        let k = &self.k;
        let (a, b) = y.split_at_mut(len);
        let f = &f;
        // Pair up the two component slabs so each task owns both.
        let mut pairs: Vec<(&mut [C64], &mut [C64])> =
            a.chunks_mut(slab).zip(b.chunks_mut(slab)).collect();
        exec::for_each_chunk_mut(&mut pairs, 1, |kz, p| {
            let (sa, sb) = &mut p[0];
            let kzv = k[kz];
            for j in 0..n {
                let kyv = k[j];
                for i in 0..n {
                    let idx = i + n * j;
                    let out = f([k[i], kyv, kzv], [sa[idx], sb[idx]]);
                    sa[idx] = out[0];
                    sb[idx] = out[1];
                }
            }
        });
    }

    /// `y = T_A x` (or `σ·D x` without a potential).
    fn weyl_into(&self, x: &[C64], y: &mut [C64]) {
        self.sigma_d_into(x, y);
        if let Some(a) = &self.potential {
            let n = self.grid.len();
            let comps = a.components();
            let (ya, yb) = y.split_at_mut(n);
            let (xa, xb) = x.split_at(n);
            let mut pairs: Vec<(&mut [C64], &mut [C64])> = ya
                .chunks_mut(exec::CHUNK)
                .zip(yb.chunks_mut(exec::CHUNK))
                .collect();
            exec::for_each_chunk_mut(&mut pairs, 1, |c, p| {
                let (pa, pb) = &mut p[0];
                let base = c * exec::CHUNK;
                for o in 0..pa.len() {
                    let idx = base + o;
                    let av = [comps[0][idx], comps[1][idx], comps[2][idx]];
                    let s = sigma_dot_apply(av, [xa[idx], xb[idx]]);
                    pa[o] -= s[0];
                    pb[o] -= s[1];
                }
            });
        }
    }

    fn dirac_into(&self, x: &[C64], y: &mut [C64]) {
        let half = 2 * self.grid.len();
        let (xu, xl) = x.split_at(half);
        let (yu, yl) = y.split_at_mut(half);
        self.weyl_into(xl, yu);
        self.weyl_into(xu, yl);
        let m = self.mass;
        if m != 0.0 {
            yu.iter_mut().zip(xu).for_each(|(a, b)| *a += b * m);
            yl.iter_mut().zip(xl).for_each(|(a, b)| *a -= b * m);
        }
    }

    /// Apply `((Op₀ − shift)² + damping)⁻¹`, where `Op₀` is the free
    /// (potential-free) part of this operator, diagonalized in Fourier space.
    pub fn free_shifted_inverse_square(&self, shift: f64, damping: f64, x: &[C64], y: &mut [C64]) {
        let n = self.grid.len();
        y.copy_from_slice(x);
        let comps = self.kind.rank().components();
        for c in 0..comps {
            self.fft.forward(&mut y[c * n..(c + 1) * n]);
            if self.deflate {
                y[c * n] = C64::default();
            }
        }
        let m = self.mass;
        let resolvent = |e: f64| -> (f64, f64) {
            // Eigenvalues ±e of the free operator; returns (a, b) so that the
            // inverse equals a·I + b·Op₀.
            let ap = 1.0 / ((e - shift).powi(2) + damping);
            let am = 1.0 / ((e + shift).powi(2) + damping);
            let a = 0.5 * (ap + am);
            let b = if e > 0.0 { 0.5 * (ap - am) / e } else { 0.0 };
            (a, b)
        };
        match self.kind {
            OperatorKind::SigmaD | OperatorKind::WeylDirac => {
                self.fourier_multiply2(y, |kv, s| {
                    let e = (kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]).sqrt();
                    let (a, b) = resolvent(e);
                    let t = sigma_dot_apply(kv, s);
                    [s[0] * a + t[0] * b, s[1] * a + t[1] * b]
                });
            }
            OperatorKind::Dirac => {
                let (yu, yl) = y.split_at_mut(2 * n);
                let (u0, u1) = yu.split_at_mut(n);
                let (l0, l1) = yl.split_at_mut(n);
                let nn = self.grid.n();
                let k = &self.k;
                let slab = nn * nn;
                let mut quads: Vec<_> = u0
                    .chunks_mut(slab)
                    .zip(u1.chunks_mut(slab))
                    .zip(l0.chunks_mut(slab).zip(l1.chunks_mut(slab)))
                    .collect();
                exec::for_each_chunk_mut(&mut quads, 1, |kz, q| {
                    let ((a0, a1), (b0, b1)) = &mut q[0];
                    for j in 0..nn {
                        for i in 0..nn {
                            let idx = i + nn * j;
                            let kv = [k[i], k[j], k[kz]];
                            let e = (kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2] + m * m).sqrt();
                            let (ca, cb) = resolvent(e);
                            let u = [a0[idx], a1[idx]];
                            let l = [b0[idx], b1[idx]];
                            let su = sigma_dot_apply(kv, u);
                            let sl = sigma_dot_apply(kv, l);
                            // H₀ (u, l) = (σ·k l + m u, σ·k u − m l)
                            a0[idx] = u[0] * ca + (sl[0] + u[0] * m) * cb;
                            a1[idx] = u[1] * ca + (sl[1] + u[1] * m) * cb;
                            b0[idx] = l[0] * ca + (su[0] - l[0] * m) * cb;
                            b1[idx] = l[1] * ca + (su[1] - l[1] * m) * cb;
                        }
                    }
                });
            }
            OperatorKind::DiracSquared => {
                let nn = self.grid.n();
                let k = &self.k;
                let slab = nn * nn;
                let mut parts: Vec<&mut [C64]> = Vec::new();
                for chunk in y.chunks_mut(slab) {
                    parts.push(chunk);
                }
                exec::for_each_chunk_mut(&mut parts, 1, |s, p| {
                    let kz = s % nn;
                    for j in 0..nn {
                        for i in 0..nn {
                            let e2 = k[i] * k[i] + k[j] * k[j] + k[kz] * k[kz] + m * m;
                            p[0][i + nn * j] *= 1.0 / ((e2 - shift).powi(2) + damping);
                        }
                    }
                });
            }
        }
        for c in 0..comps {
            self.fft.inverse(&mut y[c * n..(c + 1) * n]);
        }
    }
}

impl LinearOp for OperatorHandle {
    fn dim(&self) -> usize {
        self.kind.rank().components() * self.grid.len()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        if self.deflate && matches!(self.kind, OperatorKind::WeylDirac | OperatorKind::Dirac) {
            // Op(P x) = Op x − Op c̄, and Op c̄ is pointwise since σ·D c̄ = 0.
            let n = self.grid.len();
            let means: Vec<C64> = x
                .chunks(n)
                .map(|c| exec::pairwise_sum_c(c) / n as f64)
                .collect();
            self.undeflated_apply(x, y);
            self.subtract_constant_image(&means, y);
            self.project_out_constants(y);
            return;
        }
        if self.deflate {
            let mut xp = x.to_vec();
            self.project_out_constants(&mut xp);
            if self.kind == OperatorKind::DiracSquared {
                let mut t = vec![C64::default(); x.len()];
                self.dirac_into(&xp, &mut t);
                self.project_out_constants(&mut t);
                self.dirac_into(&t, y);
            } else {
                self.undeflated_apply(&xp, y);
            }
            self.project_out_constants(y);
            return;
        }
        self.undeflated_apply(x, y);
    }
}

impl OperatorHandle {
    /// `y −= Op c` for the constant spinor with components `c`, `T c = −σ·A c`.
    fn subtract_constant_image(&self, c: &[C64], y: &mut [C64]) {
        let n = self.grid.len();
        let m = self.mass;
        let comps = self.potential.as_ref().map(|a| a.components());
        let sigma_a = |idx: usize, s: [C64; 2]| match comps {
            Some(a) => sigma_dot_apply([a[0][idx], a[1][idx], a[2][idx]], s),
            None => [C64::default(); 2],
        };
        let mut planes: Vec<&mut [C64]> = y.chunks_mut(n).collect();
        match (self.kind, planes.as_mut_slice()) {
            (OperatorKind::WeylDirac, [ya, yb]) => {
                for idx in 0..n {
                    let s = sigma_a(idx, [c[0], c[1]]);
                    ya[idx] += s[0];
                    yb[idx] += s[1];
                }
            }
            (OperatorKind::Dirac, [u0, u1, l0, l1]) => {
                let (cu0, cu1, cl0, cl1) = (c[0] * m, c[1] * m, c[2] * m, c[3] * m);
                for idx in 0..n {
                    let su = sigma_a(idx, [c[2], c[3]]);
                    let sl = sigma_a(idx, [c[0], c[1]]);
                    u0[idx] += su[0] - cu0;
                    u1[idx] += su[1] - cu1;
                    l0[idx] += sl[0] + cl0;
                    l1[idx] += sl[1] + cl1;
                }
            }
            _ => unreachable!("constant image is pointwise only for T and H"),
        }
    }

    fn undeflated_apply(&self, x: &[C64], y: &mut [C64]) {
        match self.kind {
            OperatorKind::SigmaD => self.sigma_d_into(x, y),
            OperatorKind::WeylDirac => self.weyl_into(x, y),
            OperatorKind::Dirac => self.dirac_into(x, y),
            OperatorKind::DiracSquared => {
                let mut t = vec![C64::default(); x.len()];
                self.dirac_into(x, &mut t);
                self.dirac_into(&t, y);
            }
        }
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(DtlError::Precondition(format!(
            "mass must be > 0, got {mass}"
        )))
    }
}

/// `‖(op − λ) f‖ / ‖f‖` in the discrete L² norm.
pub fn residual_norm(op: &OperatorHandle, f: &Field, lambda: f64) -> Result<f64> {
    let fnorm = f.norm();
    if fnorm == 0.0 {
        return Err(DtlError::ZeroField);
    }
    let mut r = op.apply(f)?.into_data();
    r.iter_mut()
        .zip(f.data())
        .for_each(|(a, b)| *a -= b * lambda);
    Ok((op.grid().cell_volume() * euclid_norm_sqr(&r)).sqrt() / fnorm)
}

/// Largest `‖H²ψ − (T² + m²)ψ‖ / ‖ψ‖` over `trials` seeded random 4-spinor
/// fields, where `(T² + m²)` acts block-diagonally.
pub fn susy_square_check(
    grid: Grid3D,
    potential: &PotentialSpec,
    mass: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(DtlError::Precondition("trials must be >= 1".into()));
    }
    let t = OperatorHandle::weyl_dirac(grid, potential)?;
    let h = t.with_kind(OperatorKind::Dirac, mass)?;
    let n2 = 2 * grid.len();
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let psi = Field::random(grid, Rank::Four, seed.wrapping_add(trial as u64));
        let x = psi.data();
        let mut h1 = vec![C64::default(); x.len()];
        let mut h2 = vec![C64::default(); x.len()];
        h.apply_into(x, &mut h1);
        h.apply_into(&h1, &mut h2);
        let mut t1 = vec![C64::default(); n2];
        let mut t2 = vec![C64::default(); n2];
        for b in 0..2 {
            let blk = &x[b * n2..(b + 1) * n2];
            t.apply_into(blk, &mut t1);
            t.apply_into(&t1, &mut t2);
            for (o, (&tt, &xx)) in h2[b * n2..(b + 1) * n2].iter_mut().zip(t2.iter().zip(blk)) {
                *o -= tt + xx * (mass * mass);
            }
        }
        let rel = (euclid_norm_sqr(&h2) / euclid_norm_sqr(x)).sqrt();
        worst = worst.max(rel);
    }
    Ok(worst)
}
