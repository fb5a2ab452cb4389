use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use denjoy_core::comb::CombMap;
use denjoy_core::criteria::{construct_remark4, ThetaSpec};
use denjoy_core::dirichlet::beta_at;
use denjoy_core::{normalize, numeric_modulus, EquilibriumConfig, Quadrilateral};

fn equilibrium(c: &mut Criterion) {
    let set = normalize([(-1.0, -0.4), (-0.2, 0.3), (0.5, 1.0)]).unwrap();
    let mut group = c.benchmark_group("equilibrium");
    for n in [64, 256, 512] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| CombMap::new(&set, &EquilibriumConfig::with_nodes(n)).unwrap().capacity())
        });
    }
    group.finish();
}

fn green_eval(c: &mut Criterion) {
    let set = normalize([(-1.0, -0.4), (-0.2, 0.3), (0.5, 1.0)]).unwrap();
    let map = CombMap::new(&set, &EquilibriumConfig::default()).unwrap();
    c.bench_function("green_eval", |b| b.iter(|| map.green(Complex64::new(0.1, 0.05))));
}

fn modulus(c: &mut Criterion) {
    let q = Quadrilateral::half_annulus(1.0, 2.0, true).unwrap();
    let mut group = c.benchmark_group("modulus");
    group.sample_size(10);
    group.bench_function("half_annulus_65", |b| b.iter(|| numeric_modulus(&q, 65).unwrap()));
    group.finish();
}

fn dirichlet(c: &mut Criterion) {
    let e = construct_remark4(&ThetaSpec::Power { c: 1.0, gamma: 1.0 }, 10).unwrap();
    let mut group = c.benchmark_group("beta");
    group.sample_size(10);
    for n in [65, 129] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| beta_at(&e, 67.0, 0.5, n).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, equilibrium, green_eval, modulus, dirichlet);
criterion_main!(benches);
