use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use locaudit_bench::{audit_input, lower_bound_setup};
use locaudit_core::adversary::{moment_matched_probs, sample_f_star};
use locaudit_core::auditor::simple_audit;
use locaudit_core::seed::rng_from_seed;
use locaudit_core::spheres::psi;

fn moments(c: &mut Criterion) {
    let mut g = c.benchmark_group("moment_matched_probs");
    for (g_, e) in [(0.02, 0.02), (0.02, 0.01), (0.01, 0.005)] {
        g.bench_with_input(BenchmarkId::from_parameter(e), &(g_, e), |b, &(g_, e)| {
            b.iter(|| moment_matched_probs(black_box(g_), e, e).unwrap())
        });
    }
    g.finish();
}

fn psi_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("psi");
    for d in [3usize, 10, 40] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| b.iter(|| psi(black_box(1.1), d)));
    }
    g.finish();
}

fn audit(c: &mut Criterion) {
    let (input, cfg) = audit_input(60_000, 1);
    c.bench_function("simple_audit/60k", |b| b.iter(|| simple_audit(black_box(&input), &cfg).unwrap()));
}

fn f_star(c: &mut Criterion) {
    let setup = lower_bound_setup();
    let mut rng = rng_from_seed(2);
    c.bench_function("sample_f_star/32k_cells", |b| {
        b.iter(|| sample_f_star(Arc::clone(&setup.partition), Arc::clone(&setup.probs), &mut rng))
    });
}

criterion_group!(benches, moments, psi_eval, audit, f_star);
criterion_main!(benches);
