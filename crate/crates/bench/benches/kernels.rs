use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinreg::chaos::unfold;
use spinreg::stats::geomspace;
use spinreg::{
    build_hamiltonian, build_sector, diagonalize, evolve, sample_disorder, EvolveOptions, InitialState, Parity,
    RegisterConfig, Topology,
};

fn config(n: usize) -> RegisterConfig {
    RegisterConfig::new(n, Topology::Lattice, 1.0, 1.5 / n as f64).with_seed(1)
}

fn hamiltonian(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_hamiltonian");
    for n in [6, 8, 10] {
        let r = sample_disorder(&config(n), 0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &r, |b, r| {
            b.iter(|| build_hamiltonian(black_box(r)).unwrap())
        });
    }
    group.finish();
}

fn eigensolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagonalize_sector");
    group.sample_size(10);
    for n in [6, 8, 10] {
        let h = build_sector(&sample_disorder(&config(n), 0).unwrap(), Parity::Even).unwrap();
        group
            .bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| b.iter(|| diagonalize(black_box(h)).unwrap()));
    }
    group.finish();
}

fn evolution(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve_200_times");
    let times = geomspace(0.01, 100.0, 200);
    for n in [6, 8, 10] {
        let r = sample_disorder(&config(n), 0).unwrap();
        let i = InitialState::Staggered.resolve(&r).unwrap();
        let s = diagonalize(&build_sector(&r, i.parity()).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| evolve(black_box(s), i, &times, EvolveOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn unfolding(c: &mut Criterion) {
    let s = diagonalize(&build_sector(&sample_disorder(&config(10), 0).unwrap(), Parity::Even).unwrap()).unwrap();
    let levels = s.eigenvalues().to_vec();
    c.bench_function("unfold_512_levels", |b| b.iter(|| unfold(black_box(&levels)).unwrap()));
}

criterion_group!(kernels, hamiltonian, eigensolve, evolution, unfolding);
criterion_main!(kernels);
