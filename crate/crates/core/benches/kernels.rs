//! Operator kernels on the default work pool against a single-thread pool.
//! Build with `--no-default-features` for the fully sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dtl_core::fft::Fft3;
use dtl_core::grid::{Field, Grid3D, LinearOp, OperatorHandle, Rank};
use dtl_core::potentials::PotentialSpec;
use dtl_core::C64;

fn pools() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    vec![("default", None), ("one-thread", Some(single))]
}

fn run_in<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn bench_fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft3");
    for n in [32usize, 64] {
        let fft = Fft3::new(n);
        let data: Vec<C64> = (0..n * n * n)
            .map(|i| C64::new((i as f64).sin(), 0.0))
            .collect();
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                let mut buf = data.clone();
                b.iter(|| run_in(&pool, || fft.forward(&mut buf)));
            });
        }
    }
    group.finish();
}

fn bench_weyl(c: &mut Criterion) {
    let mut group = c.benchmark_group("weyl_dirac_apply");
    group.sample_size(20);
    let pot = PotentialSpec::loss_yau_default();
    for n in [32usize, 64] {
        let g = Grid3D::new(n, 20.0).unwrap();
        let op = OperatorHandle::weyl_dirac(g, &pot).unwrap();
        let x = Field::random(g, Rank::Two, 7);
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                let mut y = vec![C64::default(); x.data().len()];
                b.iter(|| run_in(&pool, || op.apply_into(x.data(), &mut y)));
            });
        }
    }
    group.finish();
}

fn bench_preconditioner(c: &mut Criterion) {
    let mut group = c.benchmark_group("free_shifted_inverse_square");
    group.sample_size(20);
    let g = Grid3D::new(64, 20.0).unwrap();
    let op = OperatorHandle::sigma_d(g);
    let x = Field::random(g, Rank::Two, 9);
    for (name, pool) in pools() {
        group.bench_function(name, |b| {
            let mut y = vec![C64::default(); x.data().len()];
            b.iter(|| {
                run_in(&pool, || {
                    op.free_shifted_inverse_square(0.0, 0.01, x.data(), &mut y)
                })
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_fft, bench_weyl, bench_preconditioner);
criterion_main!(benches);
