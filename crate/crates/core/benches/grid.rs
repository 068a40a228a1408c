use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use muderiv::fourier::{brute_force_mu_with, Context};
use muderiv::hecke::canonical;

fn grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force_mu");
    group.sample_size(10);
    for (d, p) in [(11u64, 3u64), (19, 7)] {
        let ctx = Context::new(&canonical(d).unwrap(), p, 40).unwrap();
        let label = format!("d{d}_p{p}_B500");
        group.bench_with_input(BenchmarkId::new("sequential", &label), &ctx, |b, ctx| {
            b.iter(|| brute_force_mu_with(ctx, 500, false).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("parallel", &label), &ctx, |b, ctx| {
            b.iter(|| brute_force_mu_with(ctx, 500, true).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, grid);
criterion_main!(benches);
