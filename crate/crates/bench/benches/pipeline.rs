use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graph_mcs::experiment::{build_channels, run_one, select_channels, ExperimentConfig};
use graph_mcs::filters::{chebyshev_apply, chebyshev_fit, exact_filter, meyer_pair};
use graph_mcs::graph::{random_sensor_graph, Graph, LaplacianKind};
use graph_mcs::operator::Bounded;
use graph_mcs::spectral::{eigendecompose, SpectralDecomposition};
use nalgebra::DVector;

fn setup(n: usize) -> (Graph, SpectralDecomposition) {
    let g = random_sensor_graph(n, 6, 1).unwrap();
    let d = eigendecompose(&g.laplacian(LaplacianKind::Combinatorial).unwrap(), None).unwrap();
    (g, d)
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigendecompose");
    for n in [64, 128, 256] {
        let (g, _) = setup(n);
        let lap = g.laplacian(LaplacianKind::Combinatorial).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &lap, |b, lap| {
            b.iter(|| eigendecompose(black_box(lap), None).unwrap())
        });
    }
    group.finish();
}

fn filtering(c: &mut Criterion) {
    let (g, d) = setup(256);
    let (low, _) = meyer_pair(d.lambda_max());
    let fit = chebyshev_fit(&low, 50, d.lambda_max()).unwrap();
    let op = Arc::new(Bounded {
        inner: g.laplacian_sparse(LaplacianKind::Combinatorial).unwrap(),
        bound: d.lambda_max(),
    });
    let dense = exact_filter(&d, &low);
    let x = DVector::from_fn(256, |i, _| (i as f64).sin());
    let mut group = c.benchmark_group("filter_256");
    group.bench_function("chebyshev_50", |b| {
        b.iter(|| chebyshev_apply(op.as_ref(), &fit, black_box(&x)).unwrap())
    });
    group.bench_function("dense", |b| b.iter(|| &dense * black_box(&x)));
    group.finish();
}

fn selection(c: &mut Criterion) {
    let mut group = c.benchmark_group("sss_two_channel");
    group.sample_size(10);
    for n in [64, 128] {
        let (g, d) = setup(n);
        for mode in ["exact", "neumann"] {
            let mut cfg = ExperimentConfig::default();
            cfg.set("sss", mode).unwrap();
            let ch = build_channels(&cfg, &g, &d, n / 2, 1).unwrap();
            group.bench_with_input(BenchmarkId::new(mode, n), &ch, |b, ch| {
                b.iter(|| select_channels(&cfg, ch, n / 2).unwrap())
            });
        }
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_one");
    group.sample_size(10);
    for model in ["pws", "ubp"] {
        let mut cfg = ExperimentConfig::default();
        cfg.set("n", "128").unwrap();
        cfg.set("model", model).unwrap();
        group.bench_function(model, |b| b.iter(|| run_one(&cfg, 0).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, spectral, filtering, selection, full_run);
criterion_main!(benches);
