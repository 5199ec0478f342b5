use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use patchpeps::generators::random_injective_peps;
use patchpeps::oracle::{exact_expectation_with, OracleConfig};
use patchpeps::{par, patch_expectation, LatticeSpec, Observable};
use std::hint::black_box;

const POLICIES: [(&str, bool); 2] = [("sequential", false), ("parallel", true)];

fn patch(c: &mut Criterion) {
    let peps = random_injective_peps(&LatticeSpec::grid(7, 7).unwrap(), 2, 2, 0.1, 42).unwrap();
    let z = Observable::preset("pauli-z", vec![3, 3], 2).unwrap();
    let mut group = c.benchmark_group("patch_7x7");
    group.sample_size(10);
    for ell in [2usize, 3] {
        for (name, on) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, ell), &ell, |b, &ell| {
                par::set_parallel(on);
                b.iter(|| patch_expectation(black_box(&peps), &z, ell).unwrap().value)
            });
        }
    }
    group.finish();
    par::set_parallel(true);
}

fn oracle(c: &mut Criterion) {
    let peps = random_injective_peps(&LatticeSpec::grid(4, 4).unwrap(), 2, 2, 0.1, 42).unwrap();
    let z = Observable::preset("pauli-z", vec![1, 1], 2).unwrap();
    let mut group = c.benchmark_group("oracle_4x4");
    group.sample_size(10);
    for (route, cfg) in [
        ("state_vector", OracleConfig { cross_check: false, ..OracleConfig::default() }),
        ("network", OracleConfig { state_vector_cutoff: 0, ..OracleConfig::default() }),
    ] {
        for (name, on) in POLICIES {
            group.bench_function(BenchmarkId::new(name, route), |b| {
                par::set_parallel(on);
                b.iter(|| exact_expectation_with(black_box(&peps), &z, &cfg).unwrap().value)
            });
        }
    }
    group.finish();
    par::set_parallel(true);
}

criterion_group!(benches, patch, oracle);
criterion_main!(benches);
