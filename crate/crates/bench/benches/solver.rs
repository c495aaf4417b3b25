use criterion::{black_box, criterion_group, criterion_main, Criterion};
use henon_bench::reference_params;
use henon_core::{integrate_ivp, solve_annulus, AnnulusRequest, ShootingInput, SolverConfig};

fn bench_radial_rhs(c: &mut Criterion) {
    let params = reference_params();
    c.bench_function("radial_rhs", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..1000 {
                let r = 1.0 + i as f64 * 1e-3;
                acc += params.radial_rhs(black_box(r), 0.3, -0.1);
            }
            acc
        });
    });
}

fn bench_integrate_ivp(c: &mut Criterion) {
    let params = reference_params();
    let input = ShootingInput {
        params,
        inner_radius: 1.0,
        delta: 16.0,
    };
    let config = SolverConfig::default().ivp_config(1.0, 2.0);
    c.bench_function("integrate_ivp_annulus_span", |b| {
        b.iter(|| integrate_ivp(black_box(&input), &config).unwrap());
    });
}

fn bench_solve_annulus(c: &mut Criterion) {
    let params = reference_params();
    let config = SolverConfig::default();
    c.bench_function("solve_annulus", |b| {
        b.iter(|| {
            let request = AnnulusRequest::new(black_box(params), 1.0, 2.0).unwrap();
            solve_annulus(&request, &config).unwrap()
        });
    });
}

criterion_group!(
    solver,
    bench_radial_rhs,
    bench_integrate_ivp,
    bench_solve_annulus
);
criterion_main!(solver);
