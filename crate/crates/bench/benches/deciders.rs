use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dqi_bench::{id_problems, medical, psb, reachability_path};
use dqi_core::{nqi, nqi_via_gfp, oracle_nqi, pqi, ChaseBudget, DomainBound};

fn fixtures(c: &mut Criterion) {
    let m = medical();
    let q = m.query("Q").unwrap().clone();
    let smith = m.instance("Smith").unwrap().clone();
    c.bench_function("pqi/medical", |b| {
        b.iter(|| pqi(black_box(&q), &m.constraints, &m.schema, &smith, ChaseBudget::default()).unwrap())
    });
    let p = psb();
    let pq = p.query("Q").unwrap().clone();
    let v = p.instance("V").unwrap().clone();
    c.bench_function("pqi/psb", |b| {
        b.iter(|| pqi(black_box(&pq), &p.constraints, &p.schema, &v, ChaseBudget::default()).unwrap())
    });
}

fn reachability(c: &mut Criterion) {
    let mut g = c.benchmark_group("nqi/reachability");
    for n in [4usize, 6, 8] {
        let p = reachability_path(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| nqi(&p.query, &p.constraints, &p.schema, &p.instance, ChaseBudget::default()).unwrap())
        });
    }
    g.finish();
}

fn gfp_vs_oracle(c: &mut Criterion) {
    let problems = id_problems(20);
    c.bench_function("gfp/20-id-problems", |b| {
        b.iter(|| {
            for p in &problems {
                black_box(nqi_via_gfp(&p.query, &p.constraints, &p.schema, &p.instance).unwrap());
            }
        })
    });
    c.bench_function("oracle/20-id-problems", |b| {
        b.iter(|| {
            for p in &problems {
                black_box(oracle_nqi(&p.query, &p.constraints, &p.schema, &p.instance, &DomainBound::new(0)).unwrap());
            }
        })
    });
}

criterion_group!(benches, fixtures, reachability, gfp_vs_oracle);
criterion_main!(benches);
