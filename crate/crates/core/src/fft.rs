//! Three-dimensional complex FFT on an `n × n × n` cube in x-fastest order
//! (`index = i + n·(j + n·k)`), built from rustfft 1-D plans.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::exec;
use crate::C64;

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform, `e^{-2πi j·k/n}` kernel.
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.forward, 1.0);
    }

    /// Inverse transform including the `1/n³` normalization.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.inverse, 1.0 / self.len() as f64);
    }

    fn transform(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>, scale: f64) {
        let n = self.n;
        let slab = n * n;
        assert_eq!(data.len(), slab * n, "FFT buffer length mismatch");

        // x: rows are contiguous.
        exec::for_each_chunk_mut(data, slab, |_, s| {
            let mut scratch = vec![C64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(s, &mut scratch);
        });

        // y: transpose each z-slab, transform rows, transpose back.
        exec::for_each_chunk_mut(data, slab, |_, s| {
            let mut t = vec![C64::default(); slab];
            let mut scratch = vec![C64::default(); plan.get_inplace_scratch_len()];
            transpose(s, 0, n, &mut t, n, n);
            plan.process_with_scratch(&mut t, &mut scratch);
            transpose(&t, 0, n, s, n, n);
        });

        // z: global transpose so that k is fastest, transform, transpose back.
        // Work buffer reused per thread; a nested call on the same thread finds it taken and allocates.
        let mut t = Z_BUFFER.with(|c| c.take());
        t.resize(slab * n, C64::default());
        {
            let src: &[C64] = data;
            exec::for_each_chunk_mut(&mut t, slab, |j, out| {
                transpose(src, n * j, slab, out, n, n);
                let mut scratch = vec![C64::default(); plan.get_inplace_scratch_len()];
                plan.process_with_scratch(out, &mut scratch);
            });
        }
        // Scatter `b` consecutive k-slabs per task.
        let b = if n % TILE == 0 { TILE } else { 1 };
        let src: &[C64] = &t;
        exec::for_each_chunk_mut(data, b * slab, |c, out| {
            let k0 = c * b;
            for j in 0..n {
                for i in 0..n {
                    let at = k0 + n * (i + n * j);
                    for (q, v) in src[at..at + b].iter().enumerate() {
                        out[q * slab + i + n * j] = *v * scale;
                    }
                }
            }
        });
        Z_BUFFER.with(|c| c.replace(t));
    }
}

const TILE: usize = 8;

thread_local! {
    static Z_BUFFER: std::cell::RefCell<Vec<C64>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// `dst[r + dst_stride·c] = src[off + c + src_stride·r]` for `r, c < n`, in cache tiles.
fn transpose(
    src: &[C64],
    off: usize,
    src_stride: usize,
    dst: &mut [C64],
    dst_stride: usize,
    n: usize,
) {
    let b = TILE.min(n);
    for r0 in (0..n).step_by(b) {
        for c0 in (0..n).step_by(b) {
            for r in r0..(r0 + b).min(n) {
                let row = &src[off + src_stride * r..];
                for c in c0..(c0 + b).min(n) {
                    dst[r + dst_stride * c] = row[c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[C64], n: usize) -> Vec<C64> {
        let mut out = vec![C64::default(); data.len()];
        let w = -2.0 * std::f64::consts::PI / n as f64;
        for k3 in 0..n {
            for k2 in 0..n {
                for k1 in 0..n {
                    let mut acc = C64::default();
                    for z in 0..n {
                        for y in 0..n {
                            for x in 0..n {
                                let ph = w * ((k1 * x + k2 * y + k3 * z) as f64);
                                acc += data[x + n * (y + n * z)] * C64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[k1 + n * (k2 + n * k3)] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_and_round_trips() {
        for n in [4, 8, 6] {
            let data: Vec<C64> = (0..n * n * n)
                .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
                .collect();
            let fft = Fft3::new(n);
            let mut d = data.clone();
            fft.forward(&mut d);
            let reference = naive_dft(&data, n);
            for (a, b) in d.iter().zip(&reference) {
                assert!((a - b).norm() < 1e-11);
            }
            fft.inverse(&mut d);
            for (a, b) in d.iter().zip(&data) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }
}
