use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use iontomo::gate::fock::{displacement, SpinDependentDisplacement, SpinMotionState, DEFAULT_N_MAX};
use iontomo::gate::{apply_ideal_gate, gate_operating_point, khz_to_rad_s};
use iontomo::tomography::{mle_fit, simulate_counts, DetectionModel, MeasurementSetting, MleOptions};
use iontomo::{Basis, PureState, Seed};
use num_complex::Complex64 as C64;

fn bench_displacement(c: &mut Criterion) {
    c.bench_function("displacement_n20", |b| {
        b.iter(|| displacement(black_box(C64::new(0.3, -0.2)), DEFAULT_N_MAX))
    });
}

fn bench_propagation(c: &mut Criterion) {
    let p = gate_operating_point(khz_to_rad_s(6.4), 1).unwrap();
    let init = SpinMotionState::product(&PureState::basis(Basis::Uu), 0, DEFAULT_N_MAX).unwrap();
    c.bench_function("gate_propagation_n20", |b| {
        b.iter(|| {
            SpinDependentDisplacement::from_params(&p, black_box(p.tau_g), DEFAULT_N_MAX).apply_unchecked(&init)
        })
    });
}

fn bench_mle(c: &mut Criterion) {
    let rho = apply_ideal_gate(&PureState::basis(Basis::Uu), 0.0, 0.0).density();
    let det = DetectionModel::symmetric(0.97);
    let records = simulate_counts(&rho, &MeasurementSetting::all(), 200, &det, Seed(1)).unwrap();
    let opts = MleOptions::default();
    c.bench_function("mle_fit_200_shots", |b| b.iter(|| mle_fit(black_box(&records), &det, &opts).unwrap()));
}

criterion_group!(kernels, bench_displacement, bench_propagation, bench_mle);
criterion_main!(kernels);
