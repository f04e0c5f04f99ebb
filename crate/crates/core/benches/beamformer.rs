//! Beamforming and SVD correction throughput.
//!
//! With the default `parallel` feature each stage is timed on the full
//! worker pool ("par") and pinned to one thread ("seq-pool"). Build with
//! `--no-default-features` to time the rayon-free sequential path ("seq").

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use svdbf::arraysim::{build_phantom, simulate_rf, symmetric_angles, Extent, PhantomSpec, PulseModel, TransducerArray};
use svdbf::beamform::{das_beamform, ImagingGrid};
use svdbf::par;
use svdbf::svdcore::{svd_beamform, CorrectionMode, PatchGrid};

fn modes() -> Vec<(&'static str, usize)> {
    if par::is_parallel() {
        vec![("par", 0), ("seq-pool", 1)]
    } else {
        vec![("seq", 0)]
    }
}

fn stages(c: &mut Criterion) {
    let array = TransducerArray::new(64, 0.2e-3, 6.25e6, 25e6, 1540.0).unwrap();
    let pulse = PulseModel::new(6.25e6, 2.0).unwrap();
    let grid = ImagingGrid::centered(&array, 12e-3, 48, 96).unwrap();
    let spec = PhantomSpec {
        extent: Extent {
            x_min: grid.x0,
            x_max: grid.x_max(),
            z_min: grid.z0,
            z_max: grid.z_max(),
        },
        speckle_density: 0.2,
        wavelength: array.wavelength(),
        pins: Vec::new(),
        cysts: Vec::new(),
        seed: 7,
    };
    let field = build_phantom(&spec).unwrap();
    let angles = symmetric_angles(32, 36f64.to_radians());
    let rf = simulate_rf(&array, &pulse, &field, &angles, None).unwrap();
    let r = das_beamform(&rf, &grid, 1.0).unwrap();
    let patches = PatchGrid::new(&grid, 24, 24, 0.5).unwrap();

    let mut g = c.benchmark_group("das_beamform");
    g.sample_size(10);
    for (label, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| par::with_threads(threads, || black_box(das_beamform(&rf, &grid, 1.0).unwrap())))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("svd_beamform");
    g.sample_size(20);
    for (label, threads) in modes() {
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| {
                par::with_threads(threads, || {
                    black_box(svd_beamform(&r, &patches, CorrectionMode::Rank1).unwrap())
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
