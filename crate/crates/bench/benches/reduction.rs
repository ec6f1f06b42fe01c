use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tdr_bench::{air_quality_sized, blobs, planted, tensor};
use tdr_core::{embed_neighbor, feature_contributions, pca_fit_1d, unfold, JobControl, Mode, NeighborParams};

fn bench_unfold(c: &mut Criterion) {
    let mut group = c.benchmark_group("unfold");
    for dims in [[53, 55, 5], [100, 200, 20], [40, 864, 30]] {
        let t = tensor(dims);
        let id = format!("{}x{}x{}", dims[0], dims[1], dims[2]);
        for mode in Mode::ALL {
            group.bench_with_input(BenchmarkId::new(mode.as_str(), &id), &t, |b, t| {
                b.iter(|| unfold(black_box(t), mode))
            });
        }
    }
    group.finish();
}

fn bench_pca(c: &mut Criterion) {
    let mut group = c.benchmark_group("pca_fit_1d");
    let t = air_quality_sized();
    for mode in Mode::ALL {
        let x = unfold(&t, mode).matrix;
        group.bench_function(mode.as_str(), |b| b.iter(|| pca_fit_1d(black_box(x.view())).unwrap()));
    }
    let wide = unfold(&tensor([60, 80, 200]), Mode::Variable).matrix;
    group.bench_function("200 columns", |b| b.iter(|| pca_fit_1d(black_box(wide.view())).unwrap()));
    group.finish();
}

fn bench_embed(c: &mut Criterion) {
    let mut group = c.benchmark_group("embed_neighbor");
    group.sample_size(10);
    for rows in [300, 1500] {
        let y = blobs(rows);
        group.bench_with_input(BenchmarkId::from_parameter(rows), &y, |b, y| {
            b.iter(|| embed_neighbor(y.view(), NeighborParams::default(), &JobControl::new()).unwrap())
        });
    }
    group.finish();
}

fn bench_contributions(c: &mut Criterion) {
    let mut group = c.benchmark_group("feature_contributions");
    for (rows, cols) in [(200, 10), (1000, 53), (2000, 200)] {
        let (y, members) = planted(rows, cols);
        group.bench_function(format!("{rows}x{cols}"), |b| {
            b.iter(|| feature_contributions(black_box(y.view()), &members).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_unfold, bench_pca, bench_embed, bench_contributions);
criterion_main!(benches);
