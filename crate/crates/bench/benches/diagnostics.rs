use criterion::{criterion_group, criterion_main, Criterion};
use piv_bench::solenoidal_flow;
use piv_core::turbdiag::{
    coarse_grained_invariants, density_flux, divergence_stats, energy_spectrum, structure_function,
};

fn diagnostics(c: &mut Criterion) {
    let flow = solenoidal_flow(256, 0);
    let rho = flow.u_field();
    let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
    let mut g = c.benchmark_group("diagnose_256");
    g.sample_size(20);
    g.bench_function("spectrum", |b| b.iter(|| energy_spectrum(&flow).unwrap()));
    g.bench_function("divergence", |b| b.iter(|| divergence_stats(&flow, 64).unwrap()));
    g.bench_function("structure_fn", |b| {
        b.iter(|| structure_function(&flow, &[2, 4], &radii, 16).unwrap())
    });
    g.bench_function("invariants", |b| {
        b.iter(|| coarse_grained_invariants(&flow, 2.0, 64).unwrap())
    });
    g.bench_function("flux", |b| b.iter(|| density_flux(&rho, &flow, &radii, 16).unwrap()));
    g.finish();
}

criterion_group!(benches, diagnostics);
criterion_main!(benches);
