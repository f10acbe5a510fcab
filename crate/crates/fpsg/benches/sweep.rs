//! Throughput benchmarks for the hot loops: backward sweeps, candidate
//! certification and Monte Carlo rollout. Run once with the default
//! features (rayon) and once with `--no-default-features` (sequential) to
//! compare; the benchmark ids carry the mode so both sets of reports
//! coexist under target/criterion.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fpsg::scenarios::insurance::build_insurance_model;
use fpsg::solver::{CertifyContext, Provenance};
use fpsg::{build_goal_lattice, evaluate_best_response, evaluate_policy, simulate, MarkovMultipolicy, Rational};

fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench_sweeps(c: &mut Criterion) {
    let (model, goal) = build_insurance_model();
    let m = 12;
    let lattice = build_goal_lattice(&model, &[goal.clone()], m);
    let policy = MarkovMultipolicy::uniform(&model, &lattice, m);

    c.bench_function(&format!("policy_sweep_m12/{}", mode()), |b| {
        b.iter(|| evaluate_policy(black_box(&model), &policy, &lattice, 0, m).unwrap())
    });

    c.bench_function(&format!("best_response_sweep_m12/{}", mode()), |b| {
        b.iter(|| evaluate_best_response(black_box(&model), &policy, &lattice, 0, m).unwrap())
    });
}

fn bench_certify(c: &mut Criterion) {
    let (model, goal) = build_insurance_model();
    let epsilon: Rational = "0.5".parse().unwrap();
    let ctx = CertifyContext::new(&model, &[goal], &epsilon).unwrap();
    let policy = MarkovMultipolicy::uniform(&model, &ctx.lattice, ctx.horizon());

    c.bench_function(&format!("certify_insurance_eps05/{}", mode()), |b| {
        b.iter(|| ctx.certify(black_box(&policy), Provenance::direct()).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let (model, goal) = build_insurance_model();
    let lattice = build_goal_lattice(&model, &[goal.clone()], 12);
    let policy = MarkovMultipolicy::uniform(&model, &lattice, 12);

    c.bench_function(&format!("simulate_10k_episodes/{}", mode()), |b| {
        b.iter(|| simulate(black_box(&model), &policy, "1", &goal, 0, 10_000, 40, 7).unwrap())
    });
}

criterion_group!(benches, bench_sweeps, bench_certify, bench_simulate);
criterion_main!(benches);
