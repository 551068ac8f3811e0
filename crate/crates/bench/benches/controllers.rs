use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use preempt_bench::{cruising_plant, BrakingCase, TractionCase};
use preempt_core::ocp::{solve, SolverConfig};
use preempt_core::plant::{plant_step, ActuatorInput};
use preempt_core::preview::PreviewMode;

fn plant(c: &mut Criterion) {
    let (st, p, t) = cruising_plant(15.0);
    let input = ActuatorInput {
        tau_m_cmd: 40.0,
        tau_brake: [0.0; 4],
        delta: 0.02,
    };
    c.bench_function("plant_step", |b| b.iter(|| plant_step(black_box(&st), &input, &[0.9; 4], 0.001, &p, &t).unwrap()));
}

fn traction(c: &mut Criterion) {
    for (name, mode) in [("traction_step_preemptive", PreviewMode::Preemptive), ("traction_step_reactive", PreviewMode::Reactive)] {
        let case = TractionCase::new(mode);
        c.bench_function(name, |b| {
            b.iter_batched(
                || case.controller.clone(),
                |mut ctrl| ctrl.step(&case.meas, case.tau_driver, &case.friction),
                BatchSize::SmallInput,
            )
        });
    }
    let case = TractionCase::new(PreviewMode::Preemptive);
    let problem = case.controller.problem(&case.meas, case.tau_driver, &case.friction);
    let cfg = SolverConfig::default();
    c.bench_function("traction_solve_cold", |b| b.iter(|| solve(black_box(&problem), &cfg, None).unwrap()));
}

fn braking(c: &mut Criterion) {
    let case = BrakingCase::new();
    let mut group = c.benchmark_group("braking");
    group.sample_size(20);
    group.bench_function("dt_step", |b| {
        b.iter_batched(
            || case.controller.clone(),
            |mut ctrl| ctrl.step(&case.state, case.tau_driver, &case.curvature, &case.friction),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, plant, traction, braking);
criterion_main!(benches);
