use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rectmoment::moment::{Mode, MomentSystem};
use rectmoment::verifier::DEFAULT_TOL;
use rectmoment::*;

fn fixture() -> (Instance, Layout) {
    gen_guillotine(11, 15, BoxSpec::new(3.0, 2.0).unwrap())
}

fn moment_system(c: &mut Criterion) {
    let (inst, layout) = fixture();
    let sys = MomentSystem::build(&inst, 8, Mode::Rotatable).unwrap();
    let vars = sys.layout_to_vars(&layout).unwrap();
    c.bench_function("residual_n16_smax8", |b| {
        b.iter(|| sys.residual(black_box(&vars)).unwrap())
    });
    c.bench_function("jacobian_n16_smax8", |b| {
        b.iter(|| sys.jacobian(black_box(&vars)).unwrap())
    });
}

fn verification(c: &mut Criterion) {
    let (inst, layout) = fixture();
    c.bench_function("verify_layout_n16", |b| {
        b.iter(|| verify_layout(black_box(&inst), black_box(&layout), DEFAULT_TOL).unwrap())
    });
    c.bench_function("corner_cancellation_n16", |b| {
        b.iter(|| corner_cancellation(black_box(&layout), inst.bbox(), DEFAULT_TOL))
    });
    let exact_inst = ExactInstance::from_instance(&inst).unwrap();
    let exact_layout = ExactLayout::from_layout(&layout).unwrap();
    c.bench_function("verify_exact_n16", |b| {
        b.iter(|| verify_exact(black_box(&exact_inst), black_box(&exact_layout)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let inst = Instance::new(&[(1.0, 2.0); 8], BoxSpec::new(4.0, 4.0).unwrap(), true).unwrap();
    c.bench_function("oracle_dominoes_4x4", |b| {
        b.iter(|| oracle_feasible(black_box(&inst)).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let inst = Instance::new(&[(1.0, 2.0); 3], BoxSpec::new(2.0, 3.0).unwrap(), true).unwrap();
    let cfg = SolveConfig {
        restarts: 200,
        ..SolveConfig::default()
    };
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    group.bench_function("three_dominoes", |b| {
        b.iter(|| solve_multistart(black_box(&inst), &cfg, None, Mode::Rotatable).unwrap())
    });
    group.finish();
}

criterion_group!(benches, moment_system, verification, oracle, solver);
criterion_main!(benches);
