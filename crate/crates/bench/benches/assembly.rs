use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracfem::density::{assemble_m, density_at_quadrature, CollocationH2};
use fracfem::farfield::assemble_k;
use fracfem::solver::{assemble_operator, LinearOperator};
use fracfem::assemble_b;
use fracfem_bench::Fixture;

fn near_field(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_b");
    g.sample_size(10);
    for level in [2, 3] {
        let f = Fixture::disk(level, 6).unwrap();
        g.bench_with_input(BenchmarkId::new("disk", f.mesh.n_free), &f, |b, f| {
            b.iter(|| assemble_b(&f.mesh, &f.kernel, &f.opts.singular, f.opts.interface).unwrap())
        });
    }
    let f = Fixture::bump(3, 0.2).unwrap();
    g.bench_with_input(BenchmarkId::new("bump", f.mesh.n_free), &f, |b, f| {
        b.iter(|| assemble_b(&f.mesh, &f.kernel, &f.opts.singular, f.opts.interface).unwrap())
    });
    g.finish();
}

fn far_field(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_k");
    g.sample_size(10);
    for level in [2, 3] {
        let f = Fixture::disk(level, 6).unwrap();
        let (cloud, ck) = f.cloud().unwrap();
        g.bench_with_input(BenchmarkId::new("disk", f.mesh.n_free), &f, |b, f| {
            b.iter(|| assemble_k(&f.mesh, &f.kernel, &cloud, &ck, &f.opts.h2, &f.opts.leaf).unwrap())
        });
    }
    g.finish();
}

fn density(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_m");
    g.sample_size(10);
    for level in [2, 3] {
        let f = Fixture::disk(level, 6).unwrap();
        let (cloud, ck) = f.cloud().unwrap();
        g.bench_with_input(BenchmarkId::new("disk", f.mesh.n_free), &f, |b, f| {
            b.iter(|| {
                let krho = CollocationH2::build(&f.mesh, &cloud, &f.kernel, &ck, &f.opts.collocation).unwrap();
                let rho = density_at_quadrature(&krho, &cloud).unwrap();
                assemble_m(&f.mesh, &cloud, &rho, f.opts.literal_mass)
            })
        });
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let f = Fixture::disk(3, 6).unwrap();
    let (op, _) = assemble_operator(&f.mesh, &f.kernel, &f.opts).unwrap();
    let v = vec![1.0; op.dim()];
    c.bench_function("apply_a/disk-721", |b| b.iter(|| op.apply(&v).unwrap()));
}

criterion_group!(benches, near_field, far_field, density, matvec);
criterion_main!(benches);
