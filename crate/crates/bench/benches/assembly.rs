use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use etdfem_core::fem::{assemble_stiffness, Mesh1D};
use etdfem_core::tfrac::{apply_riesz_tempered_many, QuadratureRule, TemperedParams};
use etdfem_core::field::ScalarField;
use std::hint::black_box;

fn stiffness(c: &mut Criterion) {
    let q = QuadratureRule::default();
    let p = TemperedParams::new(1.6, 1.0).unwrap();
    let mut group = c.benchmark_group("assemble_stiffness");
    group.sample_size(10);
    for n in [32usize, 128, 512] {
        let mesh = Mesh1D::new(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &mesh, |b, mesh| {
            b.iter(|| assemble_stiffness(black_box(mesh), &p, &q).unwrap())
        });
    }
    group.finish();
}

fn riesz_nodes(c: &mut Criterion) {
    let q = QuadratureRule::default();
    let p = TemperedParams::new(1.6, 1.0).unwrap();
    let f = ScalarField::bubble(3, 3);
    let xs: Vec<f64> = (1..256).map(|i| i as f64 / 256.0).collect();
    c.bench_function("riesz_255_nodes", |b| {
        b.iter(|| apply_riesz_tempered_many(black_box(&f), &p, &xs, &q).unwrap())
    });
}

criterion_group!(benches, stiffness, riesz_nodes);
criterion_main!(benches);
