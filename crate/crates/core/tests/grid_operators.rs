use std::f64::consts::PI;

use dtl_core::grid::{
    curl_spectral, div_spectral, gauge_transform, residual_norm, sample_potential,
    susy_square_check, Field, Grid3D, LinearOp, OperatorHandle, OperatorKind, Rank,
};
use dtl_core::potentials::PotentialSpec;
use dtl_core::spinor::sigma_dot;
use dtl_core::{RealVec3, SpinorC2, C64};

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn apply(op: &OperatorHandle, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::default(); x.len()];
    op.apply_into(x, &mut y);
    y
}

fn operators(g: Grid3D) -> Vec<OperatorHandle> {
    let ly = PotentialSpec::loss_yau_default();
    vec![
        OperatorHandle::sigma_d(g),
        OperatorHandle::weyl_dirac(g, &ly).unwrap(),
        OperatorHandle::dirac(g, &ly, 0.7).unwrap(),
        OperatorHandle::dirac_squared(g, &ly, 0.7).unwrap(),
        OperatorHandle::weyl_dirac(g, &ly)
            .unwrap()
            .with_constants_deflated(),
        OperatorHandle::dirac(g, &ly, 0.7)
            .unwrap()
            .with_constants_deflated(),
    ]
}

#[test]
fn operators_are_hermitian() {
    let g = Grid3D::new(16, 4.0).unwrap();
    for op in operators(g) {
        let x = Field::random(g, op.kind().rank(), 1);
        let y = Field::random(g, op.kind().rank(), 2);
        let lhs = inner(x.data(), &apply(&op, y.data()));
        let rhs = inner(&apply(&op, x.data()), y.data());
        let scale = lhs.norm().max(1.0);
        assert!(
            (lhs - rhs).norm() / scale < 1e-12,
            "{:?}: {lhs} vs {rhs}",
            op.kind()
        );
    }
}

#[test]
fn plane_waves_diagonalize_sigma_d() {
    let g = Grid3D::new(16, 3.0).unwrap();
    let op = OperatorHandle::sigma_d(g);
    let k1 = PI / g.half_width();
    for m in [[1, 0, 0], [2, -1, 3], [0, 0, -7], [8, 8, 8]] {
        let k = RealVec3::new(m[0] as f64 * k1, m[1] as f64 * k1, m[2] as f64 * k1);
        // The Nyquist index carries the wavenumber −n/2·π/L.
        let kk = RealVec3(k.0.map(|v| {
            if (v / k1).round() as i64 == 8 {
                -8.0 * k1
            } else {
                v
            }
        }));
        let chi = SpinorC2::new(C64::new(0.3, 0.1), C64::new(-0.5, 0.8));
        let f = Field::sample2(g, |x| {
            let ph = k.0[0] * (x.0[0] + 3.0) + k.0[1] * (x.0[1] + 3.0) + k.0[2] * (x.0[2] + 3.0);
            chi.scale(C64::from_polar(1.0, ph))
        })
        .unwrap();
        let tf = op.apply(&f).unwrap();
        let s = sigma_dot(kk);
        for idx in [0, 17, 555, 4095] {
            let want = s.apply(&f.spinor2_at(idx));
            assert!((tf.spinor2_at(idx) - want).norm() < 1e-10, "{m:?}");
        }
    }
}

#[test]
fn dirac_square_is_block_diagonal() {
    let g = Grid3D::new(16, 5.0).unwrap();
    let ly = PotentialSpec::loss_yau_default();
    for m in [0.5, 1.0, 2.0] {
        assert!(susy_square_check(g, &ly, m, 5, 3).unwrap() <= 1e-10);
    }
    assert!(susy_square_check(g, &ly, 1.0, 0, 3).is_err());
}

#[test]
fn dirac_gap_inequality() {
    // ‖Hψ‖² = ‖Tψ_l‖² + ‖Tψ_u‖² + m²‖ψ‖² ≥ m²‖ψ‖².
    let g = Grid3D::new(16, 5.0).unwrap();
    let ly = PotentialSpec::loss_yau_default();
    let m = 1.3;
    let h = OperatorHandle::dirac(g, &ly, m).unwrap();
    for seed in 0..5 {
        let psi = Field::random(g, Rank::Four, seed);
        let hp = apply(&h, psi.data());
        let lhs = inner(&hp, &hp).re;
        let rhs = m * m * inner(psi.data(), psi.data()).re;
        assert!(lhs >= rhs * (1.0 - 1e-12));
    }
}

#[test]
fn dirac_chiral_symmetry() {
    // J = diag(I, −I) anticommutes with the off-diagonal part, so HJ + JH = 2mβJ = 2m.
    let g = Grid3D::new(8, 3.0).unwrap();
    let ly = PotentialSpec::loss_yau_default();
    let m = 0.9;
    let h = OperatorHandle::dirac(g, &ly, m).unwrap();
    let psi = Field::random(g, Rank::Four, 11);
    let half = 2 * g.len();
    let flip = |v: &[C64]| -> Vec<C64> {
        v.iter()
            .enumerate()
            .map(|(i, z)| if i < half { *z } else { -*z })
            .collect()
    };
    let a = apply(&h, &flip(psi.data()));
    let b = flip(&apply(&h, psi.data()));
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        let want = psi.data()[i] * (2.0 * m);
        assert!((x + y - want).norm() < 1e-10);
    }
}

#[test]
fn deflation_removes_constants() {
    let g = Grid3D::new(8, 3.0).unwrap();
    let ly = PotentialSpec::loss_yau_default();
    let t = OperatorHandle::weyl_dirac(g, &ly).unwrap();
    assert!(!t.constants_deflated());
    let td = t.with_constants_deflated();
    assert!(td.constants_deflated());
    assert_eq!(
        td.with_kind(OperatorKind::Dirac, 1.0)
            .unwrap()
            .constants_deflated(),
        true
    );
    let c = Field::constant(g, &[C64::new(1.0, 0.0), C64::new(0.0, 2.0)]).unwrap();
    let y = apply(&td, c.data());
    assert!(y.iter().all(|z| z.norm() < 1e-12));
    let x = Field::random(g, Rank::Two, 4);
    let y = apply(&td, x.data());
    let n = g.len();
    for comp in 0..2 {
        let mean: C64 = y[comp * n..(comp + 1) * n].iter().sum::<C64>() / n as f64;
        assert!(mean.norm() < 1e-12);
    }
    let project = |v: &mut [C64]| {
        for c in v.chunks_mut(n) {
            let mean = c.iter().sum::<C64>() / n as f64;
            c.iter_mut().for_each(|z| *z -= mean);
        }
    };
    for (plain, rank) in [
        (t.clone(), Rank::Two),
        (OperatorHandle::dirac(g, &ly, 0.6).unwrap(), Rank::Four),
    ] {
        let x = Field::random(g, rank, 9);
        let mut xp = x.data().to_vec();
        project(&mut xp);
        let mut want = apply(&plain, &xp);
        project(&mut want);
        let got = apply(&plain.with_constants_deflated(), x.data());
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-12));
    }
    assert!(t.constant_lift() > 0.0);
    assert_eq!(OperatorHandle::sigma_d(g).constant_lift(), 0.0);
}

#[test]
fn preconditioner_inverts_free_square() {
    let g = Grid3D::new(8, 2.0).unwrap();
    let op = OperatorHandle::sigma_d(g);
    let x = Field::random(g, Rank::Two, 5);
    let (s, d) = (0.3, 0.05);
    let mut y = vec![C64::default(); x.data().len()];
    op.free_shifted_inverse_square(s, d, x.data(), &mut y);
    // ((σ·D − s)² + d) y = x
    let t1 = apply(&op, &y);
    let t1: Vec<C64> = t1.iter().zip(&y).map(|(a, b)| a - b * s).collect();
    let t2 = apply(&op, &t1);
    let back: Vec<C64> = t2
        .iter()
        .zip(&t1)
        .zip(&y)
        .map(|((a, b), c)| a - b * s + c * d)
        .collect();
    for (a, b) in back.iter().zip(x.data()) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn residual_norm_of_exact_eigenfunction() {
    let g = Grid3D::new(8, 3.0).unwrap();
    let op = OperatorHandle::sigma_d(g);
    let c = Field::constant(g, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    assert!(residual_norm(&op, &c, 0.0).unwrap() < 1e-14);
    assert!(residual_norm(&op, &Field::zeros(g, Rank::Two), 0.0).is_err());
    let four = Field::zeros(g, Rank::Four);
    assert!(op.apply(&four).is_err());
}

#[test]
fn gauge_transform_is_coulomb_and_idempotent() {
    let g = Grid3D::new(32, 10.0).unwrap();
    let ly = PotentialSpec::loss_yau_default();
    let (gauged, chi) = gauge_transform(&ly, g).unwrap();
    let a0 = sample_potential(&ly, &g).unwrap();
    let a1 = sample_potential(&gauged, &g).unwrap();
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(l2(&div_spectral(&a1)) <= 1e-8 * l2(&div_spectral(&a0)));
    let c0 = curl_spectral(&a0);
    assert!(curl_spectral(&a1).sub(&c0).unwrap().norm() <= 1e-10 * c0.norm());
    assert!(chi.max_abs() > 0.0);
    // Gauging again changes nothing: the new χ is already zero.
    let sampled = PotentialSpec::sampled(a1);
    let (_, chi2) = gauge_transform(&sampled, g).unwrap();
    assert!(chi2.max_abs() < 1e-8 * chi.max_abs().max(1.0));
}
