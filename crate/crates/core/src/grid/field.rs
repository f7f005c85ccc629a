use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Grid3D;
use crate::error::{DtlError, Result};
use crate::exec;
use crate::{RealVec3, SpinorC2, SpinorC4, C64};

/// Number of spinor components carried by a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank {
    Two,
    Four,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Two => 2,
            Rank::Four => 4,
        }
    }

    pub fn from_components(c: usize) -> Result<Rank> {
        match c {
            2 => Ok(Rank::Two),
            4 => Ok(Rank::Four),
            _ => Err(DtlError::Format(format!("unsupported rank {c}"))),
        }
    }
}

/// Spinor-valued field sampled on a [`Grid3D`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid3D,
    rank: Rank,
    data: Vec<C64>,
}

impl Field {
    pub fn zeros(grid: Grid3D, rank: Rank) -> Field {
        Field {
            grid,
            rank,
            data: vec![C64::default(); rank.components() * grid.len()],
        }
    }

    pub fn from_data(grid: Grid3D, rank: Rank, data: Vec<C64>) -> Result<Field> {
        if data.len() != rank.components() * grid.len() {
            return Err(DtlError::GridMismatch(format!(
                "{} values for rank {} on {} nodes",
                data.len(),
                rank.components(),
                grid.len()
            )));
        }
        if data.iter().any(|z| !z.is_finite()) {
            return Err(DtlError::NonFinite("field data".into()));
        }
        Ok(Field { grid, rank, data })
    }

    /// Sample a 2-spinor evaluator at every node.
    pub fn sample2<F>(grid: Grid3D, f: F) -> Result<Field>
    where
        F: Fn(RealVec3) -> SpinorC2 + Sync + Send,
    {
        let vals = exec::map_collect(grid.len(), |idx| f(grid.node(idx)));
        Self::from_values(grid, Rank::Two, vals.iter().map(|s| s.to_array().to_vec()))
    }

    /// Sample a 4-spinor evaluator at every node.
    pub fn sample4<F>(grid: Grid3D, f: F) -> Result<Field>
    where
        F: Fn(RealVec3) -> SpinorC4 + Sync + Send,
    {
        let vals = exec::map_collect(grid.len(), |idx| f(grid.node(idx)));
        Self::from_values(grid, Rank::Four, vals.iter().map(|s| s.to_array().to_vec()))
    }

    fn from_values<I>(grid: Grid3D, rank: Rank, vals: I) -> Result<Field>
    where
        I: Iterator<Item = Vec<C64>>,
    {
        let n = grid.len();
        let mut data = vec![C64::default(); rank.components() * n];
        for (idx, v) in vals.enumerate() {
            for (c, z) in v.into_iter().enumerate() {
                if !z.is_finite() {
                    return Err(DtlError::NonFinite(format!(
                        "sample at {:?}",
                        grid.node(idx).0
                    )));
                }
                data[c * n + idx] = z;
            }
        }
        Ok(Field { grid, rank, data })
    }

    /// Field with independent standard complex Gaussian entries.
    pub fn random(grid: Grid3D, rank: Rank, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rank.components() * grid.len())
            .map(|_| {
                // Box–Muller keeps the dependency surface to `rand` itself.
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen();
                let r = (-2.0 * u1.ln()).sqrt();
                C64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
            })
            .collect();
        Field { grid, rank, data }
    }

    /// Constant spinor on every node.
    pub fn constant(grid: Grid3D, values: &[C64]) -> Result<Field> {
        let rank = Rank::from_components(values.len())?;
        let n = grid.len();
        let mut data = Vec::with_capacity(values.len() * n);
        for v in values {
            data.extend(std::iter::repeat_n(*v, n));
        }
        Ok(Field { grid, rank, data })
    }

    /// `ᵗ(upper, lower)` from two rank-2 fields.
    pub fn from_blocks(upper: &Field, lower: &Field) -> Result<Field> {
        upper.grid.check_same(&lower.grid)?;
        for f in [upper, lower] {
            if f.rank != Rank::Two {
                return Err(DtlError::RankMismatch {
                    expected: 2,
                    found: f.rank.components(),
                });
            }
        }
        let mut data = upper.data.clone();
        data.extend_from_slice(&lower.data);
        Ok(Field {
            grid: upper.grid,
            rank: Rank::Four,
            data,
        })
    }

    pub fn upper(&self) -> Result<Field> {
        self.block(0)
    }

    pub fn lower(&self) -> Result<Field> {
        self.block(1)
    }

    fn block(&self, b: usize) -> Result<Field> {
        if self.rank != Rank::Four {
            return Err(DtlError::RankMismatch {
                expected: 4,
                found: self.rank.components(),
            });
        }
        let n = self.grid.len();
        Ok(Field {
            grid: self.grid,
            rank: Rank::Two,
            data: self.data[2 * b * n..2 * (b + 1) * n].to_vec(),
        })
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[C64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn spinor2_at(&self, idx: usize) -> SpinorC2 {
        let n = self.grid.len();
        SpinorC2::new(self.data[idx], self.data[n + idx])
    }

    pub fn spinor4_at(&self, idx: usize) -> SpinorC4 {
        let n = self.grid.len();
        SpinorC4::from_array([
            self.data[idx],
            self.data[n + idx],
            self.data[2 * n + idx],
            self.data[3 * n + idx],
        ])
    }

    /// Pointwise Euclidean norm of the spinor at node `idx`.
    pub fn pointwise_norm(&self, idx: usize) -> f64 {
        let n = self.grid.len();
        (0..self.rank.components())
            .map(|c| self.data[c * n + idx].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Discrete L² norm `h^{3/2}·‖samples‖₂`.
    pub fn norm(&self) -> f64 {
        (self.grid.cell_volume() * euclid_norm_sqr(&self.data)).sqrt()
    }

    /// Discrete inner product `h³ Σ conj(self)·other`.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(inner_raw(&self.data, &other.data) * self.grid.cell_volume())
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.rank != other.rank {
            return Err(DtlError::RankMismatch {
                expected: self.rank.components(),
                found: other.rank.components(),
            });
        }
        Ok(())
    }

    /// `self − other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn scaled(&self, s: C64) -> Field {
        let mut out = self.clone();
        exec::for_each_chunk_mut(&mut out.data, exec::CHUNK, |_, c| {
            c.iter_mut().for_each(|z| *z *= s)
        });
        out
    }

    pub fn normalized(&self) -> Result<Field> {
        let n = self.norm();
        if n == 0.0 {
            return Err(DtlError::ZeroField);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }
}

pub(crate) fn euclid_norm_sqr(v: &[C64]) -> f64 {
    exec::sum_f64(v.len(), |i| v[i].norm_sqr())
}

pub(crate) fn inner_raw(a: &[C64], b: &[C64]) -> C64 {
    exec::sum_c64(a.len(), |i| a[i].conj() * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_and_norm() {
        let g = Grid3D::new(8, 1.0).unwrap();
        let f = Field::constant(g, &[C64::new(1.0, 0.0), C64::default()]).unwrap();
        assert_eq!(f.rank(), Rank::Two);
        assert!((0..g.len()).all(|i| f.spinor2_at(i) == SpinorC2::real(1.0, 0.0)));
        // |f|² = 1 integrated over the (2L)³ = 8 box.
        assert!((f.norm() - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn blocks_round_trip() {
        let g = Grid3D::new(8, 1.0).unwrap();
        let u = Field::random(g, Rank::Two, 1);
        let l = Field::random(g, Rank::Two, 2);
        let f = Field::from_blocks(&u, &l).unwrap();
        assert_eq!(f.upper().unwrap(), u);
        assert_eq!(f.lower().unwrap(), l);
        assert!((f.norm().powi(2) - u.norm().powi(2) - l.norm().powi(2)).abs() < 1e-9);
        assert!(u.upper().is_err());
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = Grid3D::new(8, 1.0).unwrap();
        let r = Field::sample2(g, |_| SpinorC2::real(f64::NAN, 0.0));
        assert!(matches!(r, Err(DtlError::NonFinite(_))));
    }

    #[test]
    fn random_is_seed_deterministic() {
        let g = Grid3D::new(8, 1.0).unwrap();
        assert_eq!(
            Field::random(g, Rank::Four, 9),
            Field::random(g, Rank::Four, 9)
        );
        assert_ne!(
            Field::random(g, Rank::Four, 9),
            Field::random(g, Rank::Four, 10)
        );
    }
}
