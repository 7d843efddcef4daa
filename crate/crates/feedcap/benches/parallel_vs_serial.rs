//! Parallel vs sequential throughput on the two data-parallel hot paths:
//! Monte Carlo trial batches and the conjugate-ray grid of the rate search.
//!
//! The parallel side runs in a multi-thread rayon pool, the serial side in
//! a single-thread pool over the identical work items, so the comparison
//! isolates scheduling from arithmetic.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use feedcap::noise::ArModel;
use feedcap::params::Sk2Params;
use feedcap::rate::sk2_power_distinct;
use feedcap::sim::{simulate, SchemeParams, SimConfig};

fn pools() -> (rayon::ThreadPool, rayon::ThreadPool) {
    let par = rayon::ThreadPoolBuilder::new().build().unwrap();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    (par, serial)
}

fn bench_simulate(c: &mut Criterion) {
    let (par, serial) = pools();
    let config = SimConfig {
        model: ArModel::new(vec![0.3]).unwrap(),
        scheme: SchemeParams::Sk2(Sk2Params::conjugate(1.35, 1.0).unwrap()),
        horizon: 40,
        trials: 2000,
        seed: 9,
        log_domain: false,
    };
    let mut group = c.benchmark_group("simulate_2000x40");
    group.bench_with_input(BenchmarkId::new("parallel", "default"), &config, |b, cfg| {
        b.iter(|| par.install(|| simulate(cfg).unwrap()))
    });
    group.bench_with_input(BenchmarkId::new("serial", "1thread"), &config, |b, cfg| {
        b.iter(|| serial.install(|| simulate(cfg).unwrap()))
    });
    group.finish();
}

fn bench_power_grid(c: &mut Criterion) {
    let (par, serial) = pools();
    let model = ArModel::new(vec![0.3, 0.4]).unwrap();
    let eval_grid = |model: &ArModel| {
        feedcap::par::map_indexed(20_000, |k| {
            let theta = std::f64::consts::PI * (k + 1) as f64 / 20_001.0;
            let g = Complex64::from_polar(1.4, theta);
            sk2_power_distinct(model, g, g.conj()).unwrap()
        })
        .iter()
        .sum::<f64>()
    };
    let mut group = c.benchmark_group("conjugate_power_grid_20k");
    group.bench_function("parallel", |b| b.iter(|| par.install(|| eval_grid(&model))));
    group.bench_function("serial", |b| b.iter(|| serial.install(|| eval_grid(&model))));
    group.finish();
}

criterion_group!(benches, bench_simulate, bench_power_grid);
criterion_main!(benches);
