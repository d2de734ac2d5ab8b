//! Benchmarks for the kernels that dominate experiment runtime: wavelet
//! table construction, the Radon forward projection, both test statistics,
//! and the Monte-Carlo null quantile.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sigdetect::detect::{
    chi2_null_quantile_from_eigenvalues, run_chi2_test, Chi2TestSpec, SupTestSpec,
};
use sigdetect::dict::{build_index_set_interval, vaguelettes_integration};
use sigdetect::operators::radon_forward;
use sigdetect::sampling::{make_product_grid_2d, make_uniform_grid, ScalarField};
use sigdetect::wavelets::{daubechies_cascade, wavelet_element_2d};

fn bench_cascade(c: &mut Criterion) {
    c.bench_function("daubechies_cascade_12tap_12levels", |b| {
        b.iter(|| daubechies_cascade(black_box(12), black_box(12)).unwrap())
    });
}

fn bench_radon_forward(c: &mut Criterion) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let basis = daubechies_cascade(8, 12).unwrap();
    let grid = make_product_grid_2d((-r, r, 64), (-r, r, 64)).unwrap();
    let eta = wavelet_element_2d(&basis, 3, (-4, -4), 3, &grid).unwrap();
    let t_grid = make_uniform_grid(-r, r, 128).unwrap();
    let theta_grid = make_uniform_grid(0.0, std::f64::consts::PI, 45).unwrap();
    c.bench_function("radon_forward_64px_128t_45theta", |b| {
        b.iter(|| radon_forward(black_box(&eta), &t_grid, &theta_grid).unwrap())
    });
}

fn bench_test_statistics(c: &mut Criterion) {
    let basis = daubechies_cascade(12, 12).unwrap();
    let grid = make_uniform_grid(0.0, 1.0, 4096).unwrap();
    let indices = build_index_set_interval(&basis, 5).unwrap();
    let system = vaguelettes_integration(&basis, &indices, &grid).unwrap();
    let sup = SupTestSpec::new(system.images().to_vec(), 0.05, ScalarField::Real, 1.0).unwrap();
    let chi2 = Chi2TestSpec::new(
        system.vaguelettes().unwrap().to_vec(),
        0.05,
        ScalarField::Real,
        1.0,
        10_000,
        7,
    )
    .unwrap();
    let y = system.images()[0].scale(3.0);
    c.bench_function("sup_statistic_n4096_d22", |b| {
        b.iter(|| sup.statistic(black_box(&y)).unwrap())
    });
    c.bench_function("chi2_test_n4096_d22", |b| {
        b.iter(|| run_chi2_test(&chi2, black_box(&y)).unwrap())
    });
}

fn bench_null_quantile(c: &mut Criterion) {
    let eigenvalues: Vec<f64> = (1..=54).map(|k| 1.0 + 1.0 / k as f64).collect();
    let mut group = c.benchmark_group("quantile");
    group.sample_size(10);
    group.bench_function("chi2_null_quantile_54weights_10k_draws", |b| {
        b.iter(|| {
            chi2_null_quantile_from_eigenvalues(
                black_box(&eigenvalues),
                1.0,
                0.05,
                ScalarField::Real,
                10_000,
                7,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_cascade,
    bench_radon_forward,
    bench_test_statistics,
    bench_null_quantile
);
criterion_main!(benches);
