use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use seaplan_core::channel::{ergodic_rate, LinkGains};
use seaplan_core::convex::SolverOptions;
use seaplan_core::power::solve_power;
use seaplan_core::sca::default_initializations;
use seaplan_core::trajectory::{bisect_q, BisectionOptions, Kinematics};
use seaplan_core::{paper_scenario, plan, PlanOptions};

fn ergodic(c: &mut Criterion) {
    let mut g = c.benchmark_group("ergodic_rate");
    for (label, a, k) in [("rayleigh", 100.0, 0.0), ("k31", 100.0, 31.3), ("low_snr", 0.01, 10.0)] {
        g.bench_function(label, |b| b.iter(|| ergodic_rate(black_box(a), black_box(k)).unwrap()));
    }
    g.finish();
}

fn power_lp(c: &mut Criterion) {
    let s = paper_scenario();
    let gains = LinkGains::new(&s);
    let (_, init) = default_initializations(&s).remove(1);
    let opts = SolverOptions::default();
    c.bench_function("power_lp_t10", |b| b.iter(|| solve_power(&s, &gains, black_box(&init), &opts).unwrap()));
}

fn bisection(c: &mut Criterion) {
    let s = paper_scenario();
    let gains = LinkGains::new(&s);
    let (_, init) = default_initializations(&s).remove(1);
    let powers = solve_power(&s, &gains, &init, &SolverOptions::default()).unwrap().powers;
    let kin = Kinematics::from_positions(&init, s.dt, s.limits.v_min, s.limits.v_max);
    let lin = kin.linearization();
    let opts = BisectionOptions::default();
    let mut g = c.benchmark_group("bisection_t10");
    g.sample_size(10);
    g.bench_function("cold", |b| b.iter(|| bisect_q(&s, &gains, &lin, &powers, init[0], None, &opts).unwrap()));
    g.finish();
}

fn full_plan(c: &mut Criterion) {
    let s = paper_scenario();
    let (_, init) = default_initializations(&s).remove(1);
    let opts = PlanOptions::default();
    let mut g = c.benchmark_group("plan_t10");
    g.sample_size(10);
    g.bench_function("three_quarter", |b| b.iter(|| plan(&s, black_box(&init), &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, ergodic, power_lp, bisection, full_plan);
criterion_main!(benches);
