//! Parallel against sequential execution of the hot paths. Build with
//! `--no-default-features` to time the sequential fallback on its own.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bvpm::capacity::{zv_detect, CapacityProblem};
use bvpm::domain::GridSpec;
use bvpm::kernels::BoundaryMeasure;
use bvpm::lab::Lab;
use bvpm::par;
use bvpm::potentials::Potential;
use bvpm::solver::{default_atom_width, default_schedule, solve_measure};

fn modes() -> Vec<(&'static str, bool)> {
    let mut m = vec![("sequential", true)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", false));
    }
    m
}

fn truncation_chain(c: &mut Criterion) {
    let lab = Lab::new(GridSpec::disk(128, 128)).unwrap();
    let v = Potential::distance_power(1.0, 1.5);
    let mu = BoundaryMeasure::dirac(&lab.grid, 0.3, 1.0);
    let w = default_atom_width(&lab.grid);
    let mut group = c.benchmark_group("truncation_chain_128");
    group.sample_size(10);
    for (name, seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| solve_measure(&lab, &v, &mu, &default_schedule(), w).unwrap());
        });
    }
    group.finish();
    par::force_sequential(false);
}

fn capacity_setup(c: &mut Criterion) {
    let lab = Lab::new(GridSpec::disk(64, 128)).unwrap();
    let v = Potential::cone_singular(0.0, 0.5, 1.0, 2.0).unwrap();
    let mut group = c.benchmark_group("zv_and_dual_basis");
    group.sample_size(10);
    for (name, seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| {
                let zv = zv_detect(&lab, &v).unwrap();
                CapacityProblem::new(&lab, &v).unwrap().with_singular(&zv)
            });
        });
    }
    group.finish();
    par::force_sequential(false);
}

criterion_group!(benches, truncation_chain, capacity_setup);
criterion_main!(benches);
