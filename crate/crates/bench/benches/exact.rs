use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use doflab_core::{
    assemble, build_region, kuser_d1_scheme, outer_bound_sumdof, pdd_scheme, rank, run_suite, sample_channel, sumdof,
    vertices, CsitConfig, SuiteOptions,
};

fn cfg(s: &str) -> CsitConfig {
    s.parse().unwrap()
}

fn linear_algebra(c: &mut Criterion) {
    let r = sample_channel(5, 5, 16, 1, 100).unwrap();
    let tr = assemble(&kuser_d1_scheme(&r).unwrap(), &r).unwrap();
    let received = tr.received(4, tr.everyone());
    c.bench_function("rank 16x65 received matrix", |b| b.iter(|| rank(black_box(&received))));
}

fn regions(c: &mut Criterion) {
    let ddd = build_region(&cfg("DDD")).unwrap();
    let ppdd = build_region(&cfg("PPDD")).unwrap();
    c.bench_function("build region PPDDD", |b| b.iter(|| build_region(black_box(&cfg("PPDDD"))).unwrap()));
    c.bench_function("sumdof DDD", |b| b.iter(|| sumdof(black_box(&ddd)).unwrap()));
    c.bench_function("sumdof PPDD", |b| b.iter(|| sumdof(black_box(&ppdd)).unwrap()));
    c.bench_function("vertices PPDD", |b| b.iter(|| vertices(black_box(&ppdd)).unwrap()));
    c.bench_function("cutting-plane sumdof PPPPPDDDDD", |b| {
        b.iter(|| outer_bound_sumdof(black_box(&cfg("PPPPPDDDDD"))).unwrap())
    });
}

fn schemes(c: &mut Criterion) {
    let r3 = sample_channel(3, 3, 4, 7, 100).unwrap();
    c.bench_function("pdd scheme + decodability", |b| {
        b.iter(|| assemble(&pdd_scheme(black_box(&r3)).unwrap(), &r3).unwrap().decodable())
    });
    let r4 = sample_channel(4, 4, 8, 3, 100).unwrap();
    c.bench_function("k-user scheme K=4 + decodability", |b| {
        b.iter(|| assemble(&kuser_d1_scheme(black_box(&r4)).unwrap(), &r4).unwrap().decodable())
    });
}

fn lemma_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("lemma suite");
    group.sample_size(10);
    group.bench_function("PDD, 5 trials", |b| b.iter(|| run_suite(black_box(&cfg("PDD")), &SuiteOptions::new(5, 0)).unwrap()));
    group.finish();
}

criterion_group!(benches, linear_algebra, regions, schemes, lemma_suite);
criterion_main!(benches);
