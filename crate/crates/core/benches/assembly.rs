//! Benchmarks of the data-parallel element loops against the sequential
//! fallback: system assembly and dG-error evaluation on the moving-domain
//! benchmarks.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stiga::analysis::{dg_norm_with, DiscreteField};
use stiga::assembly::{assemble_system_with, DGParameters};
use stiga::cases;
use stiga::geometry::MultiPatchDomain;
use stiga::par::ExecMode;

fn modes() -> [(&'static str, ExecMode); 2] {
    [
        ("seq", ExecMode::Sequential),
        ("par", ExecMode::Parallel),
    ]
}

fn bench_assembly_2d(c: &mut Criterion) {
    let (base, problem) = cases::case_moving_2d().unwrap();
    let params = DGParameters::standard(2, 1);
    let mut group = c.benchmark_group("assemble_moving_2d_p2");
    for level in [3usize, 5] {
        let domain = base.with_discretization(2, level).unwrap();
        for (name, mode) in modes() {
            group.bench_with_input(
                BenchmarkId::new(name, level),
                &domain,
                |b, domain: &MultiPatchDomain| {
                    b.iter(|| {
                        black_box(
                            assemble_system_with(domain, &problem, &params, mode).unwrap(),
                        )
                    })
                },
            );
        }
    }
    group.finish();
}

fn bench_assembly_3d(c: &mut Criterion) {
    let (base, problem) = cases::case_moving_3d().unwrap();
    let params = DGParameters::standard(2, 2);
    let domain = base.with_discretization(2, 2).unwrap();
    let mut group = c.benchmark_group("assemble_moving_3d_p2_level2");
    group.sample_size(20);
    for (name, mode) in modes() {
        group.bench_function(name, |b| {
            b.iter(|| black_box(assemble_system_with(&domain, &problem, &params, mode).unwrap()))
        });
    }
    group.finish();
}

fn bench_dg_norm(c: &mut Criterion) {
    let (base, _) = cases::case_moving_2d().unwrap();
    let params = DGParameters::standard(2, 1);
    let domain = base.with_discretization(2, 5).unwrap();
    let total: usize = domain.patches().iter().map(|p| p.space.dim()).sum();
    let coeffs: Vec<f64> = (0..total).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut group = c.benchmark_group("dg_norm_moving_2d_p2_level5");
    for (name, mode) in modes() {
        group.bench_function(name, |b| {
            b.iter(|| {
                let field = DiscreteField::new(&domain, &coeffs);
                black_box(dg_norm_with(&field, &domain, &params, mode).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_assembly_2d, bench_assembly_3d, bench_dg_norm);
criterion_main!(benches);
