//! Sequential vs rayon execution of the hot loops. Build with
//! `--no-default-features` to see both arms take the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gmetrix::axioms::{minimal_theta_with, optimal_b_constant_with};
use gmetrix::functions::{classify_fn_with, parse_fn, ClassifyOptions, SampleGrid};
use gmetrix::model::{random_space, ClassTag};
use gmetrix::par::Exec;
use gmetrix::preservation::{counterexample_search, Budget};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn space_constants(c: &mut Criterion) {
    let mut group = c.benchmark_group("space_constants");
    group.sample_size(10);
    for n in [16, 40] {
        let (d, _) = random_space(ClassTag::BMetric, n, 7).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(format!("b_constant/{name}"), n), &d, |b, d| {
                b.iter(|| optimal_b_constant_with(d, exec).unwrap())
            });
            group.bench_with_input(BenchmarkId::new(format!("minimal_theta/{name}"), n), &d, |b, d| {
                b.iter(|| minimal_theta_with(d, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn classify(c: &mut Criterion) {
    let mut group = c.benchmark_group("classify_fn");
    group.sample_size(10);
    let f = parse_fn("x^2").unwrap();
    let grid = SampleGrid::default();
    for (name, exec) in MODES {
        let opts = ClassifyOptions { exec, ..ClassifyOptions::default() };
        group.bench_function(name, |b| b.iter(|| classify_fn_with(&f, grid, &opts).unwrap()));
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("triplet_search");
    group.sample_size(10);
    let f = parse_fn("sqrt(x)").unwrap();
    for (name, exec) in MODES {
        let budget = Budget { exec, ..Budget::default() };
        group.bench_function(name, |b| {
            b.iter(|| counterexample_search(&f, ClassTag::MB, &budget, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, space_constants, classify, search);
criterion_main!(benches);
