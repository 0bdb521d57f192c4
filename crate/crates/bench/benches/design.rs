use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wedesign::allocation::criterion_values;
use wedesign::presets::{phase_one_config, phase_one_scenario, phase_two_config, phase_two_scenario};
use wedesign::simulator::montecarlo::run_monte_carlo_with;
use wedesign::{criterion as delta, run_trial, ArmState, CriterionParams, Design, Rule, SimplexVector};

fn criterion_eval(c: &mut Criterion) {
    let gamma = SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap();
    let alpha = SimplexVector::new(vec![0.25, 0.25, 0.5]).unwrap();
    let params = CriterionParams::new(gamma.clone(), 0.55).unwrap();
    c.bench_function("criterion/d3", |b| b.iter(|| delta(black_box(&alpha), &params, black_box(40))));

    let states: Vec<ArmState> = (0..7)
        .map(|j| ArmState::new(vec![0.25 + 0.05 * j as f64, 0.75], vec![j, 3]).unwrap())
        .collect();
    let binary = CriterionParams::new(SimplexVector::binary(0.25).unwrap(), 0.5).unwrap();
    c.bench_function("criterion/plugin_7_arms", |b| b.iter(|| criterion_values(black_box(&states), &binary)));
}

fn single_trial(c: &mut Criterion) {
    let mut group = c.benchmark_group("trial");
    let p1 = phase_one_config();
    let s1 = phase_one_scenario(2).unwrap();
    group.bench_function("dose_finding_20", |b| b.iter(|| run_trial(&p1, &s1, black_box(7)).unwrap()));
    for rule in [Rule::RuleI, Rule::RuleII] {
        let cfg = phase_two_config(1, Design::WeightedEntropy, rule, 0.55).unwrap();
        let sc = phase_two_scenario(1, true).unwrap();
        group.bench_with_input(BenchmarkId::new("multi_arm_423", format!("{rule:?}")), &cfg, |b, cfg| {
            b.iter(|| run_trial(cfg, &sc, black_box(7)).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    let cfg = phase_one_config();
    let sc = phase_one_scenario(1).unwrap();
    for threads in [1, 4] {
        group.bench_with_input(BenchmarkId::new("dose_finding_1000_reps", threads), &threads, |b, &t| {
            b.iter(|| run_monte_carlo_with(&cfg, &sc, 1000, Some(t)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, criterion_eval, single_trial, monte_carlo);
criterion_main!(benches);
