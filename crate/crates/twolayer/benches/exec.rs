use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twolayer::coeffs::{symbol_table_with, PhysicalParams, ReducedCoefficients};
use twolayer::exec::Exec;
use twolayer::solver::{self, Cadence, InitialQ, InitialR, Model, StepperConfig, SystemState};
use twolayer::spectral::Grid;
use twolayer::verify::{run_suites, Suite, VerifyOptions};

const POLICIES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn symbol_batch(c: &mut Criterion) {
    let ks: Vec<f64> = (0..20_000).map(|i| 1e-4 * (1.0 + i as f64)).collect();
    let mut group = c.benchmark_group("symbol_table_20k");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| symbol_table_with(&PhysicalParams::ANDAMAN, &ks, exec).unwrap())
        });
    }
    group.finish();
}

fn gauge_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("gauge_suite_20_trials");
    group.sample_size(20);
    for (name, exec) in POLICIES {
        let opts = VerifyOptions {
            exec,
            ..VerifyOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_suites(&[Suite::Gauge], &opts))
        });
    }
    group.finish();
}

fn solver_sweep(c: &mut Criterion) {
    let coeffs = ReducedCoefficients {
        a: 0.6,
        b: 0.8,
        c: 1.5,
        d: 0.4,
        alpha: -0.7,
        beta: 0.9,
    };
    let grid = Arc::new(Grid::new(256, 40.0).unwrap());
    let amps: Vec<f64> = (1..=8).map(|i| 0.02 * i as f64).collect();
    let cfg = StepperConfig::default();
    let one_run = |amp: &f64| {
        let r = solver::initial_r(
            &grid,
            InitialR::Gaussian {
                amp: *amp,
                width: 2.0,
                center: 0.0,
            },
            &mut rand::thread_rng(),
        );
        let q = solver::initial_q(
            &grid,
            InitialQ::Gaussian {
                amp: 0.2,
                width: 4.0,
                center: 0.0,
                mode: 2,
            },
        );
        let s = SystemState::new(grid.clone(), r, q, 0.0).unwrap();
        let cadence = Cadence {
            diagnostics_every: 100,
            snapshot_every: 0,
        };
        solver::run(&s, &cfg, Model::Reduced(coeffs), 0.2, cadence).unwrap()
    };
    let mut group = c.benchmark_group("solver_sweep_8_runs");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| exec.map(&amps, one_run)));
    }
    group.finish();
}

criterion_group!(benches, symbol_batch, gauge_suite, solver_sweep);
criterion_main!(benches);
