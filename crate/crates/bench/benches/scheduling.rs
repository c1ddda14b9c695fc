use batchsim_bench::DecisionFixture;
use batchsim_core::experiment::timing;
use criterion::{black_box, criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};

fn decisions(c: &mut Criterion) {
    let mut g = c.benchmark_group("model_based_decision");
    for bins in [8, 32] {
        let mut f = DecisionFixture::new(bins, 8);
        g.bench_with_input(BenchmarkId::from_parameter(bins), &bins, |b, _| {
            b.iter(|| black_box(f.decide()))
        });
    }
    g.finish();
}

fn snapshot_freeze(c: &mut Criterion) {
    let mut g = c.benchmark_group("monitoring_update");
    g.sample_size(10);
    for n in [10_000usize, 100_000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter_batched(
                || timing::synthetic_stats(n, 32, 3),
                |mut s| black_box(s.end_monitoring_window(1.0)),
                BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, decisions, snapshot_freeze);
criterion_main!(benches);
