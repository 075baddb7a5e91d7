use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rrcv::design::{solve_design, DEFAULT_ARL0};
use rrcv::mcsim::{estimate_run_length, SimConfig};
use rrcv::sweep::{sweep, SweepGrid, SweepOptions};
use rrcv::{Direction, Execution, MeasurementErrorModel, ProcessModel, RunRule, ShiftSpec};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn monte_carlo(c: &mut Criterion) {
    let pm = ProcessModel::new(0.1, 5).unwrap();
    let me = MeasurementErrorModel::new(0.05, 0.28, 1.0, 1).unwrap();
    let d = solve_design(
        RunRule::new(3, 4, Direction::Upper).unwrap(),
        &pm,
        &me,
        DEFAULT_ARL0,
    )
    .unwrap();
    let shift = ShiftSpec::from_tau(1.5, 0.1).unwrap();
    let mut group = c.benchmark_group("monte_carlo_50k");
    group.sample_size(10);
    for mode in MODES {
        let cfg = SimConfig::new(50_000, 1).unwrap().with_execution(mode);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &cfg,
            |b, cfg| b.iter(|| estimate_run_length(&d, &pm, &me, &shift, cfg).unwrap()),
        );
    }
    group.finish();
}

fn parameter_sweep(c: &mut Criterion) {
    let grid = SweepGrid {
        rules: vec![(2, 3), (3, 4), (4, 5)],
        direction: None,
        n: vec![5, 15],
        gamma0: vec![0.05, 0.1, 0.2],
        theta: vec![0.0, 0.05],
        eta: vec![0.0, 0.28],
        slope: vec![1.0],
        reps: vec![1],
        taus: vec![0.5, 0.8, 1.25, 2.0],
        ranges: vec![],
    };
    let cells = grid.cells().unwrap();
    let mut group = c.benchmark_group("sweep_288_cells");
    group.sample_size(10);
    for mode in MODES {
        let opts = SweepOptions {
            execution: mode,
            ..SweepOptions::default()
        };
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &opts,
            |b, opts| b.iter(|| sweep(&cells, opts)),
        );
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, parameter_sweep);
criterion_main!(benches);
