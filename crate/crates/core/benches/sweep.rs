//! Serial vs parallel noise sweeps, plus the fast Poisson solve they lean on.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use parea::bregman::SolverConfig;
use parea::parallel::Execution;
use parea::poisson::solve_fast;
use parea::problems::{example_paper, Sampling};
use parea::stability::run_sweep;
use parea::{GridSpec, Lattice, ScalarField};

fn sweeps(c: &mut Criterion) {
    let p = example_paper(GridSpec::unit_square(31).unwrap(), Sampling::Consistent).unwrap();
    let cfg = SolverConfig { tol: 1e-6, ..SolverConfig::default() };
    let deltas = [0.01, 0.035, 0.06];
    let seeds = [0, 1];
    let mut group = c.benchmark_group("sweep_n31");
    group.sample_size(10);
    for (label, exec) in [("serial", Execution::Serial), ("parallel", Execution::from_jobs(0))] {
        group.bench_function(label, |b| {
            b.iter(|| run_sweep(black_box(&p), &deltas, &seeds, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn poisson(c: &mut Criterion) {
    let mut group = c.benchmark_group("poisson");
    for n in [31, 99, 255] {
        let g = GridSpec::unit_square(n).unwrap();
        let f = ScalarField::from_fn(g, Lattice::Interior, |x, y| (x * y).sin());
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| b.iter(|| solve_fast(black_box(f))));
    }
    group.finish();
}

criterion_group!(benches, sweeps, poisson);
criterion_main!(benches);
