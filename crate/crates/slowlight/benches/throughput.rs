//! Throughput comparison of the rayon fan-out against the sequential path.
//!
//! Three workloads, in increasing grain size: the Doppler-averaged response
//! kernel over a frequency grid (one quadrature sum per item), a detuning
//! sweep of full spectral propagations (one FFT round trip per item), and a
//! single time-domain storage-free evolution for scale. Both execution paths
//! produce bit-identical results (see `par`), so these benches measure pure
//! scheduling cost and speedup.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use slowlight::model::{make_gaussian_pulse, TimeGrid};
use slowlight::par;
use slowlight::response::kernel_at;
use slowlight::scenarios::{static_run, Baseline};
use slowlight::solver::{evolve, GridSpec};

const TWO_PI: f64 = std::f64::consts::TAU;

fn doppler_kernel_grid(c: &mut Criterion) {
    let mut base = Baseline::default();
    base.medium.doppler_nodes = 256;
    base.grid_t = TimeGrid { n: 4096, span: 16.0 * base.pulse_tau };
    let medium = base.medium.clone();
    let drive = base.drive.clone();
    let omegas = base.grid_t.dft_frequencies();
    let eval = |w: &f64| kernel_at(&medium, &drive, *w);

    let mut group = c.benchmark_group("doppler_kernel_grid");
    group.bench_function("parallel", |b| b.iter(|| black_box(par::map(&omegas, eval))));
    group.bench_function("sequential", |b| b.iter(|| black_box(par::map_seq(&omegas, eval))));
    group.finish();
}

fn detuning_sweep_paths(c: &mut Criterion) {
    let mut base = Baseline::default();
    base.grid_t = TimeGrid { n: 1024, span: 16.0 * base.pulse_tau };
    base.medium.doppler_nodes = 32;
    base.medium.gamma10 = 1e5; // slow re-emission tail must fit the window
    let medium = base.medium.clone();
    let deltas: Vec<f64> = (1..=8).map(|k| TWO_PI * 100e6 * k as f64).collect();
    let eval = |d: &f64| {
        static_run(&base, &medium, &base.drive_at(*d, base.drive.omega_c))
            .expect("sweep point")
            .metrics
    };

    let mut group = c.benchmark_group("detuning_sweep");
    group.sample_size(20);
    group.bench_function("parallel", |b| b.iter(|| black_box(par::map(&deltas, eval))));
    group.bench_function("sequential", |b| b.iter(|| black_box(par::map_seq(&deltas, eval))));
    group.finish();
}

fn time_domain_evolution(c: &mut Criterion) {
    let mut base = Baseline::default();
    base.grid_t = TimeGrid { n: 1024, span: 16.0 * base.pulse_tau };
    base.medium.doppler_nodes = 8;
    base.medium.optical_depth = 200.0;
    base.medium.gamma10 = 1e5; // slow re-emission tail must fit the window
    let drive = base.drive_at(0.0, base.drive.omega_c);
    let pulse = make_gaussian_pulse(base.pulse_tau, drive.omega_p_peak, &base.grid_t).unwrap();
    let grid = GridSpec { n_z: 30, store_history: false, snapshot_times: Vec::new() };

    let mut group = c.benchmark_group("time_domain");
    group.sample_size(10);
    group.bench_function("evolve_1024x30x8", |b| {
        b.iter(|| black_box(evolve(&base.medium, &drive, &pulse, &grid).unwrap()))
    });
    group.finish();
}

criterion_group!(
    benches,
    doppler_kernel_grid,
    detuning_sweep_paths,
    time_domain_evolution
);
criterion_main!(benches);
