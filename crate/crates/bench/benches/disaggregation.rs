use btm_disagg::numerics::symmetric_eigen;
use btm_disagg::pipeline::run_stream;
use btm_disagg::sss::separate;
use btm_disagg::PipelineConfig;
use btm_disagg_bench::{sym_matrix, window, year_feeder};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_separate(c: &mut Criterion) {
    let ds = year_feeder(0);
    let (p, g, y) = window(&ds, 96);
    c.bench_function("separate_96", |b| {
        b.iter(|| separate(black_box(&p), black_box(&g), black_box(&y)).unwrap())
    });
}

fn bench_eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("symmetric_eigen");
    for n in [16, 40, 80] {
        let m = sym_matrix(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| symmetric_eigen(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn bench_year(c: &mut Criterion) {
    let ds = year_feeder(0);
    let cfg = PipelineConfig::default();
    let mut group = c.benchmark_group("stream");
    group.sample_size(10);
    group.bench_function("one_year_lateral", |b| b.iter(|| run_stream(&ds, "L1", &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_separate, bench_eigen, bench_year);
criterion_main!(benches);
