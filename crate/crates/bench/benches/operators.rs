use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use faer::Col;
use phsim_bench::{field_pair, unit_impedance, wave_port};
use phsim_core::sbpgrid::{assemble_diffop, green_identity_residual};
use phsim_core::timestepper::Stepper;
use phsim_core::{BoxGrid, MatrixTuple};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    for nodes in [17, 33, 65] {
        group.bench_with_input(
            BenchmarkId::new("wave colligation", nodes),
            &nodes,
            |b, &n| b.iter(|| wave_port(black_box(n)).unwrap()),
        );
    }
    let l = MatrixTuple::rot();
    let grid = BoxGrid::unit(3, 17).unwrap();
    group.bench_function("rot diffop 17^3", |b| {
        b.iter(|| assemble_diffop(&l, black_box(&grid)).unwrap())
    });
    group.finish();
}

fn stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("midpoint");
    for nodes in [17, 33, 65] {
        let col = wave_port(nodes).unwrap();
        let spec = unit_impedance(&col).unwrap();
        let stepper = Stepper::new(&col, col.constraints(&spec).unwrap(), 0.01).unwrap();
        let x = Col::from_fn(col.state_dim(), |i| ((i % 7) as f64 - 3.0) * 0.1);
        let zero = Col::zeros(stepper.constraints().len());
        group.bench_with_input(BenchmarkId::new("factorize", nodes), &nodes, |b, _| {
            b.iter(|| Stepper::new(&col, col.constraints(&spec).unwrap(), 0.01).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("step", nodes), &nodes, |b, _| {
            b.iter(|| stepper.step(black_box(&x), &zero).unwrap())
        });
    }
    group.finish();
}

fn green(c: &mut Criterion) {
    let mut group = c.benchmark_group("green residual");
    for (name, l, grid) in [
        (
            "div-grad 65^2",
            MatrixTuple::div_grad(2),
            BoxGrid::unit(2, 65).unwrap(),
        ),
        (
            "rot 17^3",
            MatrixTuple::rot(),
            BoxGrid::unit(3, 17).unwrap(),
        ),
        (
            "mindlin 65^2",
            MatrixTuple::mindlin(),
            BoxGrid::unit(2, 65).unwrap(),
        ),
    ] {
        let (f, g) = field_pair(&l, &grid, 1);
        group.bench_function(name, |b| {
            b.iter(|| green_identity_residual(&l, &grid, black_box(&f), black_box(&g)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, stepping, green);
criterion_main!(benches);
