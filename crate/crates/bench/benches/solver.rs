use std::f64::consts::FRAC_1_SQRT_2;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fanmarch::{
    build_corner_factor, eval_factor, factored_update, unfactored_update, AxisNeighbor,
    FactorFunction, NeighborData, Point, Quadrant, Vec2,
};
use fanmarch_bench::{maze, methods, simple_obstacle};

fn kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel");
    g.bench_function("unfactored", |b| {
        b.iter(|| {
            unfactored_update(
                black_box(Some(0.31)),
                black_box(Some(0.29)),
                black_box(0.01),
                black_box(1.0),
            )
        })
    });
    let nb = NeighborData {
        left: Some(AxisNeighbor::new(0.31, 0.305)),
        right: None,
        down: Some(AxisNeighbor::new(0.29, 0.287)),
        up: Some(AxisNeighbor::new(0.33, 0.326)),
    };
    let grad = Vec2::new(0.7, 0.7);
    g.bench_function("factored", |b| {
        b.iter(|| {
            factored_update(
                black_box(&nb),
                black_box(grad),
                black_box(0.31),
                black_box(0.01),
                black_box(1.0),
            )
        })
    });
    let corner = build_corner_factor(
        Point::new(0.2, 0.2),
        Vec2::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        Quadrant::NorthWest,
        1.0,
    )
    .unwrap();
    let plane = FactorFunction::ConePlane(corner);
    g.bench_function("cone_plane_eval", |b| {
        b.iter(|| eval_factor(black_box(&plane), black_box(Point::new(0.35, 0.6))))
    });
    g.finish();
}

fn solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_simple_obstacle");
    g.sample_size(10);
    let problem = simple_obstacle();
    for n in [101usize, 201] {
        let disc = problem.discretize(1.0 / (n - 1) as f64).unwrap();
        g.throughput(Throughput::Elements((n * n) as u64));
        for m in methods() {
            g.bench_with_input(BenchmarkId::new(&m.label, n), &disc, |b, d| {
                b.iter(|| m.solve(d).unwrap())
            });
        }
    }
    g.finish();

    let mut g = c.benchmark_group("solve_maze");
    g.sample_size(10);
    let problem = maze();
    let jit = methods().pop().unwrap();
    for n in [201usize, 401] {
        let disc = problem.discretize(1.0 / (n - 1) as f64).unwrap();
        g.throughput(Throughput::Elements((n * n) as u64));
        g.bench_with_input(BenchmarkId::new("just-in-time", n), &disc, |b, d| {
            b.iter(|| jit.solve(d).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, solves);
criterion_main!(benches);
