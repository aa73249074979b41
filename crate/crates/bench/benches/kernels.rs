use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nhssh_bench::nhssh_core::disorder::{ensemble_run, DisorderKind, DisorderSpec};
use nhssh_bench::nhssh_core::metrics::winding_number;
use nhssh_bench::nhssh_core::numerics::{eig_pair, integrate_linear, IntegratorContract, C64};
use nhssh_bench::nhssh_core::{Boundary, Pipeline, PhysicalConfig};
use nhssh_bench::{reference_chain, three_level_liouvillian};

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("eig_pair");
    for n in [10, 20, 40] {
        let h = reference_chain(n, Boundary::Obc).matrix;
        g.bench_with_input(BenchmarkId::from_parameter(2 * n), &h, |b, h| b.iter(|| eig_pair(black_box(h)).unwrap()));
    }
    g.finish();
}

fn liouvillian(c: &mut Criterion) {
    let l = three_level_liouvillian();
    let mut rho0 = vec![C64::new(0.0, 0.0); 9];
    rho0[4] = C64::new(1.0, 0.0);
    let t: Vec<f64> = (0..=50).map(|k| k as f64 * 0.01).collect();
    let contract = IntegratorContract::default();
    c.bench_function("integrate_linear_9x9", |b| {
        b.iter(|| integrate_linear(black_box(&l), &rho0, &t, &contract).unwrap())
    });
}

fn winding(c: &mut Criterion) {
    let h = reference_chain(20, Boundary::Obc).matrix;
    c.bench_function("winding_number_40", |b| b.iter(|| winding_number(black_box(&h), 2).unwrap()));
}

fn pipeline(c: &mut Criterion) {
    let p = Pipeline::new(&PhysicalConfig::reference()).unwrap();
    c.bench_function("clean_chain", |b| b.iter(|| p.clean_chain().unwrap()));
    let spec = DisorderSpec { kind: DisorderKind::Position, half_width: 0.1, n_realizations: 16, master_seed: 1 };
    let mut g = c.benchmark_group("ensemble");
    g.sample_size(10);
    g.bench_function("position_16", |b| b.iter(|| ensemble_run(&p, black_box(&spec)).unwrap()));
    g.finish();
}

criterion_group!(benches, eigen, liouvillian, winding, pipeline);
criterion_main!(benches);
