//! Shift-invert Lanczos with locking, and the preconditioned CG inner solves.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec;
use crate::grid::{LinearOp, OperatorHandle, OperatorKind};
use crate::C64;

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    exec::sum_c64(a.len(), |i| a[i].conj() * b[i])
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    exec::sum_f64(a.len(), |i| a[i].norm_sqr()).sqrt()
}

/// `y += s·x`
pub(crate) fn axpy(s: C64, x: &[C64], y: &mut [C64]) {
    exec::for_each_chunk_mut(y, exec::CHUNK, |c, chunk| {
        let base = c * exec::CHUNK;
        for (o, v) in chunk.iter_mut().enumerate() {
            *v += x[base + o] * s;
        }
    });
}

fn scale(s: f64, y: &mut [C64]) {
    exec::for_each_chunk_mut(y, exec::CHUNK, |_, chunk| {
        chunk.iter_mut().for_each(|v| *v *= s)
    });
}

/// Outcome of one inner solve.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct SolveStats {
    pub iterations: usize,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for a Hermitian positive definite `B`.
pub(crate) fn pcg<A, M>(
    apply_b: A,
    precond: M,
    rhs: &[C64],
    tol: f64,
    max_iter: usize,
) -> (Vec<C64>, SolveStats)
where
    A: Fn(&[C64], &mut [C64]),
    M: Fn(&[C64], &mut [C64]),
{
    let n = rhs.len();
    let mut x = vec![C64::default(); n];
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return (
            x,
            SolveStats {
                iterations: 0,
                converged: true,
            },
        );
    }
    let mut r = rhs.to_vec();
    let mut z = vec![C64::default(); n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut bp = vec![C64::default(); n];
    for it in 1..=max_iter {
        apply_b(&p, &mut bp);
        let pbp = dot(&p, &bp).re;
        if !(pbp > 0.0) {
            return (
                x,
                SolveStats {
                    iterations: it,
                    converged: false,
                },
            );
        }
        let alpha = rz / pbp;
        axpy(C64::new(alpha, 0.0), &p, &mut x);
        axpy(C64::new(-alpha, 0.0), &bp, &mut r);
        if norm(&r) <= tol * bnorm {
            return (
                x,
                SolveStats {
                    iterations: it,
                    converged: true,
                },
            );
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        exec::for_each_chunk_mut(&mut p, exec::CHUNK, |c, chunk| {
            let base = c * exec::CHUNK;
            for (o, v) in chunk.iter_mut().enumerate() {
                *v = z[base + o] + *v * beta;
            }
        });
    }
    (
        x,
        SolveStats {
            iterations: max_iter,
            converged: false,
        },
    )
}

/// `(Op − σ)⁻¹` realized by inner PCG solves on squared operators.
pub(crate) struct ShiftInvert<'a> {
    op: &'a OperatorHandle,
    /// The 2-spinor `T` (or `σ·D`) underlying `op`.
    weyl: OperatorHandle,
    shift: f64,
    damping: f64,
    tol: f64,
    max_iter: usize,
}

impl<'a> ShiftInvert<'a> {
    pub fn new(
        op: &'a OperatorHandle,
        shift: f64,
        damping: f64,
        tol: f64,
        max_iter: usize,
    ) -> Self {
        let weyl = match op.kind() {
            OperatorKind::SigmaD | OperatorKind::WeylDirac => op.clone(),
            _ => op
                .with_kind(OperatorKind::WeylDirac, 0.0)
                .expect("zero mass is valid for T"),
        };
        ShiftInvert {
            op,
            weyl,
            shift,
            damping,
            tol,
            max_iter,
        }
    }

    /// `y = ((T − s)² + q)⁻¹ r`.
    fn solve_weyl_quadratic(&self, s: f64, q: f64, r: &[C64], stats: &mut SolveStats) -> Vec<C64> {
        let t = &self.weyl;
        let apply_b = |x: &[C64], y: &mut [C64]| {
            let mut tmp = vec![C64::default(); x.len()];
            t.apply_into(x, &mut tmp);
            axpy(C64::new(-s, 0.0), x, &mut tmp);
            t.apply_into(&tmp, y);
            axpy(C64::new(-s, 0.0), &tmp, y);
            if q != 0.0 {
                axpy(C64::new(q, 0.0), x, y);
            }
        };
        let precond =
            |x: &[C64], y: &mut [C64]| t.free_shifted_inverse_square(s, q + self.damping, x, y);
        let (y, st) = pcg(apply_b, precond, r, self.tol, self.max_iter);
        stats.iterations += st.iterations;
        stats.converged &= st.converged;
        y
    }

    /// `y = (T − s)⁻¹ b` as `y = (T − s) z` with `(T − s)² z = b`, so the
    /// CG residual is exactly the residual of `(T − s) y = b`.
    fn solve_weyl_linear(&self, s: f64, b: &[C64], stats: &mut SolveStats) -> Vec<C64> {
        let z = self.solve_weyl_quadratic(s, 0.0, b, stats);
        let mut y = vec![C64::default(); b.len()];
        self.weyl.apply_into(&z, &mut y);
        axpy(C64::new(-s, 0.0), &z, &mut y);
        y
    }

    /// `y = (T² − ν²)⁻¹ r`.
    fn solve_weyl_shifted_square(&self, nu2: f64, r: &[C64], stats: &mut SolveStats) -> Vec<C64> {
        if nu2 <= 0.0 {
            self.solve_weyl_quadratic(0.0, -nu2, r, stats)
        } else {
            // T² − ν² = (T − ν)(T + ν)
            let nu = nu2.sqrt();
            let w = self.solve_weyl_linear(nu, r, stats);
            self.solve_weyl_linear(-nu, &w, stats)
        }
    }

    /// `y = (Op − σ)⁻¹ b`.
    pub fn apply(&self, b: &[C64], stats: &mut SolveStats) -> Vec<C64> {
        let s = self.shift;
        match self.op.kind() {
            OperatorKind::SigmaD | OperatorKind::WeylDirac => self.solve_weyl_linear(s, b, stats),
            OperatorKind::Dirac => self.solve_dirac(b, stats),
            OperatorKind::DiracSquared => {
                let op = self.op;
                let apply_b = |x: &[C64], y: &mut [C64]| {
                    let mut tmp = vec![C64::default(); x.len()];
                    op.apply_into(x, &mut tmp);
                    axpy(C64::new(-s, 0.0), x, &mut tmp);
                    op.apply_into(&tmp, y);
                    axpy(C64::new(-s, 0.0), &tmp, y);
                };
                let precond = |x: &[C64], y: &mut [C64]| {
                    op.free_shifted_inverse_square(s, self.damping, x, y)
                };
                let (z, st) = pcg(apply_b, precond, b, self.tol, self.max_iter);
                stats.iterations += st.iterations;
                stats.converged &= st.converged;
                let mut y = vec![C64::default(); b.len()];
                op.apply_into(&z, &mut y);
                axpy(C64::new(-s, 0.0), &z, &mut y);
                y
            }
        }
    }

    /// Block elimination of `(H − σ) y = b` against `T`:
    /// `(T² + m² − σ²) u = (m + σ) b_u + T b_l`, `l = (T u − b_l)/(m + σ)`
    /// (or the mirror image when `σ < 0`).
    fn solve_dirac(&self, b: &[C64], stats: &mut SolveStats) -> Vec<C64> {
        let half = b.len() / 2;
        let (bu, bl) = b.split_at(half);
        let m = self.op.mass();
        let s = self.shift;
        let nu2 = s * s - m * m;
        let t = &self.weyl;
        let mut out = vec![C64::default(); b.len()];
        let mut tb = vec![C64::default(); half];
        if s >= 0.0 {
            t.apply_into(bl, &mut tb);
            let mut r = tb;
            axpy(C64::new(m + s, 0.0), bu, &mut r);
            let u = self.solve_weyl_shifted_square(nu2, &r, stats);
            let mut l = vec![C64::default(); half];
            t.apply_into(&u, &mut l);
            axpy(C64::new(-1.0, 0.0), bl, &mut l);
            scale(1.0 / (m + s), &mut l);
            out[..half].copy_from_slice(&u);
            out[half..].copy_from_slice(&l);
        } else {
            t.apply_into(bu, &mut tb);
            let mut r = tb;
            axpy(C64::new(-(m - s), 0.0), bl, &mut r);
            let l = self.solve_weyl_shifted_square(nu2, &r, stats);
            let mut u = vec![C64::default(); half];
            t.apply_into(&l, &mut u);
            scale(-1.0, &mut u);
            axpy(C64::new(1.0, 0.0), bu, &mut u);
            scale(1.0 / (m - s), &mut u);
            out[..half].copy_from_slice(&u);
            out[half..].copy_from_slice(&l);
        }
        out
    }
}

/// Converged eigenpair of the shift-inverted operator.
pub(crate) struct RitzPair {
    pub vector: Vec<C64>,
}

pub(crate) struct LanczosOutcome {
    pub pairs: Vec<RitzPair>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
}

pub(crate) struct LanczosParams {
    pub count: usize,
    pub max_dim: usize,
    pub max_restarts: usize,
    pub ritz_tol: f64,
    pub seed: u64,
    /// Orthonormal vectors the Krylov spaces are kept orthogonal to.
    pub deflation: Vec<Vec<C64>>,
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    // Two passes of classical Gram–Schmidt.
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng, locked: &[Vec<C64>]) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    orthogonalize(&mut v, locked);
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);
    v
}

/// Find the `count` largest-|θ| eigenpairs of the Hermitian map `apply`,
/// one Lanczos run per pair, each run orthogonal to the pairs already locked.
/// A run that exhausts `max_dim` restarts from its best Ritz vector, at most
/// `max_restarts` times.
pub(crate) fn lanczos_locked<F>(dim: usize, apply: F, p: &LanczosParams) -> LanczosOutcome
where
    F: Fn(&[C64], &mut SolveStats) -> Vec<C64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut locked: Vec<Vec<C64>> = p.deflation.clone();
    let mut pairs = Vec::new();
    let mut outer = 0;
    let mut inner = 0;
    let mut all_converged = true;
    while pairs.len() < p.count {
        let mut start = random_unit(dim, &mut rng, &locked);
        let mut run = RunOutcome::default();
        for _ in 0..=p.max_restarts {
            run = lanczos_run(start, &apply, &locked, p);
            outer += run.steps;
            inner += run.inner;
            if run.converged {
                break;
            }
            start = run.vector.clone();
        }
        all_converged &= run.converged && run.inner_ok;
        locked.push(run.vector.clone());
        pairs.push(RitzPair { vector: run.vector });
    }
    LanczosOutcome {
        pairs,
        outer_iterations: outer,
        inner_iterations: inner,
        converged: all_converged,
    }
}

#[derive(Default)]
struct RunOutcome {
    /// Unit Ritz vector, orthogonal to the locked vectors.
    vector: Vec<C64>,
    steps: usize,
    inner: usize,
    converged: bool,
    inner_ok: bool,
}

fn lanczos_run<F>(q0: Vec<C64>, apply: &F, locked: &[Vec<C64>], p: &LanczosParams) -> RunOutcome
where
    F: Fn(&[C64], &mut SolveStats) -> Vec<C64>,
{
    let dim = q0.len();
    let mut basis: Vec<Vec<C64>> = vec![q0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best: Vec<f64> = Vec::new();
    let mut out = RunOutcome {
        inner_ok: true,
        ..Default::default()
    };
    for j in 0..p.max_dim {
        out.steps += 1;
        let mut stats = SolveStats {
            iterations: 0,
            converged: true,
        };
        let mut w = apply(&basis[j], &mut stats);
        out.inner += stats.iterations;
        out.inner_ok &= stats.converged;
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        // Ritz values of the (j+1)×(j+1) tridiagonal.
        let k = j + 1;
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .map(|(i, v)| (i, *v))
            .unwrap();
        best = eig.eigenvectors.column(imax).iter().copied().collect();
        let resid = (b * best[k - 1]).abs();
        if resid <= p.ritz_tol * theta.abs() || b <= f64::EPSILON * theta.abs() {
            out.converged = true;
            break;
        }
        if j + 1 == p.max_dim {
            break;
        }
        beta.push(b);
        scale(1.0 / b, &mut w);
        basis.push(w);
    }
    let mut v = vec![C64::default(); dim];
    for (q, c) in basis.iter().zip(&best) {
        axpy(C64::new(*c, 0.0), q, &mut v);
    }
    orthogonalize(&mut v, locked);
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);
    out.vector = v;
    out
}
