use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lozi::ensemble::Workers;
use lozi::measures::{rho_s_total, RunConfig};
use lozi::{DDReal, LoziParams};
use std::hint::black_box;

fn schedules(c: &mut Criterion) {
    let p = LoziParams::from_decimal(1.8, 0.35).unwrap();
    let cfg = RunConfig::new(20_000, 8, 1);
    let mut g = c.benchmark_group("rho_s_8x20k");
    g.sample_size(10);
    let mut cases = vec![("sequential", Workers::Sequential)];
    if cfg!(feature = "parallel") {
        cases.push(("parallel", Workers::Parallel(0)));
    }
    for (name, w) in cases {
        let run = cfg.with_workers(w);
        g.bench_with_input(BenchmarkId::new("dd", name), &run, |b, run| b.iter(|| black_box(rho_s_total::<DDReal>(&p, run).unwrap())));
        g.bench_with_input(BenchmarkId::new("native", name), &run, |b, run| b.iter(|| black_box(rho_s_total::<f64>(&p, run).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, schedules);
criterion_main!(benches);
