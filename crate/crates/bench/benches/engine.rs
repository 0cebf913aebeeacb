use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use haptic_bench::{default_grid, tap_scenario};
use haptic_core::simulate;

fn landscape(c: &mut Criterion) {
    let grid = default_grid();
    c.bench_function("force_at", |b| {
        b.iter(|| grid.force_at(black_box(12.34), black_box(0.567)))
    });
    c.bench_function("invert_current", |b| {
        b.iter(|| grid.invert_current(black_box(12.34), black_box(0.05)))
    });
    c.bench_function("zero_force_curve", |b| b.iter(|| grid.zero_force_curve()));
    c.bench_function("mpsr", |b| b.iter(|| grid.mpsr(black_box(1.0), black_box(35.0))));
}

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("tap_500mm_s", |b| {
        b.iter_batched(|| tap_scenario(500.0), |s| simulate(&s), BatchSize::LargeInput)
    });
    group.finish();
}

criterion_group!(benches, landscape, engine);
criterion_main!(benches);
