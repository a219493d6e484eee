use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use timebin_bench::{reference_config, synthetic_scan};
use timebin_core::analysis::{fit_fringe, FringeModel};
use timebin_core::montecarlo::{simulate_gates_direct, simulate_plan, GatePlan, SimOptions};
use timebin_core::predict_rates;

fn monte_carlo(c: &mut Criterion) {
    let cfg = reference_config();
    let plan = GatePlan::new(&cfg).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    let fast_gates = 100_000_000;
    group.throughput(Throughput::Elements(fast_gates));
    group.bench_function("event_table", |b| {
        b.iter(|| simulate_plan(black_box(&plan), fast_gates, &SimOptions::default()).unwrap())
    });
    let direct_gates = 200_000;
    group.throughput(Throughput::Elements(direct_gates));
    group.bench_function("per_gate_reference", |b| {
        b.iter(|| simulate_gates_direct(black_box(&cfg), direct_gates, 1).unwrap())
    });
    group.finish();
}

fn model(c: &mut Criterion) {
    let cfg = reference_config();
    c.bench_function("predict_rates", |b| b.iter(|| predict_rates(black_box(&cfg), 0.3).unwrap()));
    c.bench_function("gate_plan", |b| b.iter(|| GatePlan::new(black_box(&cfg)).unwrap()));
}

fn fitting(c: &mut Criterion) {
    c.bench_function("fit_fringe_20_points", |b| {
        b.iter_batched(
            || synthetic_scan(20, 0.98),
            |scan| fit_fringe(&scan, FringeModel::Subtracted).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, monte_carlo, model, fitting);
criterion_main!(benches);
