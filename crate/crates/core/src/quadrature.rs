//! Gauss–Legendre rules, a product rule on the unit sphere and the radial
//! panel layout shared by the shell integrators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::RealVec3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Radial layout: `[0, r0]` followed by doubling panels up to `r_max`,
/// each integrated with `order` Gauss–Legendre points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPanels {
    pub first: f64,
    pub order: usize,
}

impl Default for RadialPanels {
    fn default() -> Self {
        RadialPanels {
            first: 0.5,
            order: 16,
        }
    }
}

impl RadialPanels {
    /// Panel endpoints covering `[0, r_max]`.
    pub fn edges(&self, r_max: f64) -> Vec<f64> {
        let mut edges = vec![0.0];
        let mut r = self.first.min(r_max);
        edges.push(r);
        while r < r_max {
            r = (2.0 * r).min(r_max);
            edges.push(r);
        }
        edges
    }

    /// `(node, weight)` pairs for every panel in `edges`.
    pub fn panel_nodes(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        gauss_legendre_on(self.order, a, b)
    }
}

/// Product rule on S²: Gauss–Legendre in `cos θ`, trapezoid in `φ`.
/// Exact for spherical harmonics of degree `< min(2·n_theta, n_phi)`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub points: Vec<(RealVec3, f64)>,
}

impl SphereRule {
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let (ct, wt) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for p in 0..n_phi {
                let phi = (p as f64 + 0.5) * dphi;
                points.push((RealVec3::new(s * phi.cos(), s * phi.sin(), *c), w * dphi));
            }
        }
        SphereRule { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The 26 unit directions towards the faces, edges and corners of a cube.
pub fn directions_26() -> Vec<RealVec3> {
    let mut dirs = Vec::with_capacity(26);
    for a in -1i32..=1 {
        for b in -1i32..=1 {
            for c in -1i32..=1 {
                if (a, b, c) != (0, 0, 0) {
                    dirs.push(RealVec3::new(a as f64, b as f64, c as f64).normalized());
                }
            }
        }
    }
    dirs
}

/// `count` geometrically spaced radii in `[lo, hi]`.
pub fn geometric_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let q = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| lo * q.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * xi.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn sphere_rule_area_and_second_moment() {
        let rule = SphereRule::product(12, 24);
        let area: f64 = rule.points.iter().map(|p| p.1).sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        let zz: f64 = rule.points.iter().map(|(w, q)| q * w.0[2] * w.0[2]).sum();
        assert!((zz - 4.0 * PI / 3.0).abs() < 1e-12);
        let xy: f64 = rule.points.iter().map(|(w, q)| q * w.0[0] * w.0[1]).sum();
        assert!(xy.abs() < 1e-12);
    }

    #[test]
    fn twenty_six_unit_directions() {
        let d = directions_26();
        assert_eq!(d.len(), 26);
        assert!(d.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn panels_cover_interval() {
        let e = RadialPanels::default().edges(10.0);
        assert_eq!(e.first(), Some(&0.0));
        assert_eq!(e.last(), Some(&10.0));
        assert!(e.windows(2).all(|w| w[1] > w[0]));
    }
}
