//! Sequential against rayon execution for the three hot loops: a slab time step,
//! a plane MHD time step and the weighted-identity quadrature.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use blowup_lab::fieldlab::{weighted_terms, EnsembleSpec, Grid, ManufacturedField};
use blowup_lab::hypersim::plane::{PlaneSolver, PlaneState};
use blowup_lab::hypersim::slab::SlabSolver;
use blowup_lab::hypersim::{InitData, Mhd2d, SlabState};
use blowup_lab::Exec;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn slab_step(c: &mut Criterion) {
    let init = InitData::default();
    let mut group = c.benchmark_group("slab-step");
    for cells in [1 << 14, 1 << 17] {
        for (name, exec) in MODES {
            let state = SlabState::from_init(&init, 1, cells, 1.2).unwrap();
            let mut solver = SlabSolver::new(state, exec);
            let dt = 0.5 * solver.stable_dt();
            group.bench_with_input(BenchmarkId::new(name, cells), &cells, |b, _| {
                b.iter(|| solver.step(black_box(dt)).unwrap())
            });
        }
    }
    group.finish();
}

fn plane_step(c: &mut Criterion) {
    let init = InitData {
        b0: 1.0,
        h_amp: 0.5,
        ..Default::default()
    };
    let mut group = c.benchmark_group("mhd2d-step");
    group.sample_size(20);
    for n in [128, 256] {
        for (name, exec) in MODES {
            let state = PlaneState::from_init(&init, n, 1.2).unwrap();
            let mut solver = PlaneSolver::new(Mhd2d, state, exec);
            let dt = 0.5 * solver.stable_dt();
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| solver.step(black_box(dt)).unwrap())
            });
        }
    }
    group.finish();
}

fn identity_quadrature(c: &mut Criterion) {
    let field = ManufacturedField::random(42, &EnsembleSpec::default()).unwrap();
    let mut group = c.benchmark_group("weighted-terms");
    group.sample_size(10);
    for res in [16, 32] {
        let grid = Grid::new(3, res, 2.0).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, res), &res, |b, _| {
                b.iter(|| weighted_terms(black_box(&field), grid, 3, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, slab_step, plane_step, identity_quadrature);
criterion_main!(benches);
