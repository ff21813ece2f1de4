use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use pedassign::assign::{run_assignment, run_sweep, AffineLatency, AnalyticEvaluator, AssignmentParams};
use pedassign::geometry::load_geometry;
use pedassign::routes::{enumerate_routes, RouteSet, RouteSetConfig};
use pedassign::simulate::{Simulation, SimulationConfig};

fn route_set() -> RouteSet {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/two_walls.toml");
    let geometry = load_geometry(path).expect("scenario");
    enumerate_routes(&geometry, &RouteSetConfig::default()).expect("routes")
}

/// A simulation with a few hundred pedestrians on the floor.
fn loaded(routes: &RouteSet, config: &SimulationConfig) -> Simulation {
    let n = routes.len();
    let mut sim = Simulation::new(routes, config, &vec![1.0 / n as f64; n]).expect("simulation");
    while sim.time < 60.0 {
        sim.step();
    }
    sim
}

fn simulation_step(c: &mut Criterion) {
    let routes = route_set();
    let config = SimulationConfig {
        demand: 6.0,
        ..SimulationConfig::default()
    };
    let warm = loaded(&routes, &config);
    eprintln!("{} pedestrians after warm-up", warm.pedestrians.len());
    drop(warm);
    let mut group = c.benchmark_group("step_20");
    group.sample_size(10);
    for (name, parallel) in [("parallel", true), ("sequential", false)] {
        group.bench_function(name, |b| {
            b.iter_batched(
                || loaded(&routes, &config),
                |mut sim| {
                    for _ in 0..20 {
                        sim.step_by(config.time_step, parallel);
                    }
                    black_box(sim.pedestrians.len())
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let evaluator = AnalyticEvaluator::new(vec![
        AffineLatency { free: 60.0, slope: 40.0 },
        AffineLatency { free: 70.0, slope: 20.0 },
        AffineLatency { free: 65.0, slope: 30.0 },
    ])
    .expect("latencies");
    let params = AssignmentParams::default();
    let demands: Vec<f64> = (1..=11).map(|d| d as f64 * 0.5).collect();
    let seeds: Vec<u64> = (1..=20).collect();
    let mut group = c.benchmark_group("sweep_220");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(run_sweep(&evaluator, &demands, &seeds, &params, &|_| {}).len()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let mut done = 0;
            for &d in &demands {
                for &s in &seeds {
                    done += run_assignment(&evaluator, d, s, &params).is_ok() as usize;
                }
            }
            black_box(done)
        })
    });
    group.finish();
}

criterion_group!(benches, simulation_step, sweep);
criterion_main!(benches);
