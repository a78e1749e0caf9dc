use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ortho_gconv::engine::{ModelConfig, ModelState};
use ortho_gconv::graph::synthetic::{sbm_dataset, SbmConfig};
use ortho_gconv::ortho::{hybrid_init, newton_orthogonalize, newton_orthogonalize_backward, spectral_bound, OrthoConfig};
use ortho_gconv_bench::{random_graph, random_matrix};
use std::hint::black_box;

fn matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for d in [16, 64, 128] {
        let a = random_matrix(d, d, 1);
        let b = random_matrix(d, d, 2);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |bench, _| {
            bench.iter(|| black_box(&a).matmul(black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn spmm(c: &mut Criterion) {
    let mut group = c.benchmark_group("spmm");
    for n in [1_000, 10_000] {
        let g = random_graph(n, 4, 3);
        let h = random_matrix(n, 64, 4);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| g.spmm(black_box(&h)).unwrap())
        });
    }
    group.finish();
}

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton");
    for d in [16, 64] {
        let q_hat = spectral_bound(&hybrid_init(d, d, 0.4, 5)).unwrap();
        let grad = random_matrix(d, d, 6);
        group.bench_with_input(BenchmarkId::new("forward_T4", d), &d, |bench, _| {
            bench.iter(|| newton_orthogonalize(black_box(&q_hat), 4).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("backward_T4", d), &d, |bench, _| {
            bench.iter(|| newton_orthogonalize_backward(black_box(&q_hat), 4, &grad).unwrap())
        });
    }
    group.finish();
}

fn epoch(c: &mut Criterion) {
    let ds = sbm_dataset(&SbmConfig::default()).unwrap();
    let mask = ds.splits.train.clone();
    let mut group = c.benchmark_group("train_step");
    group.sample_size(20);
    for (name, ortho) in [("vanilla", OrthoConfig::vanilla()), ("ortho", OrthoConfig::default())] {
        let cfg = ModelConfig::new(ds.num_features(), 16, ds.num_classes, 8).with_ortho(ortho);
        let mut state = ModelState::init(cfg).unwrap();
        group.bench_function(name, |bench| bench.iter(|| state.loss_and_gradients(&ds, &mask, true).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, matmul, spmm, newton, epoch);
criterion_main!(benches);
