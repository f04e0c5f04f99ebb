use std::collections::BTreeSet;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svdbf::arraysim::{simulate_rf, simulate_rf_window, AngularAberration, PulseModel, ScattererField, TimeWindow, TransducerArray};
use svdbf::beamform::{apply_angular_law, compound, ComplexImage, ImagingGrid, LawDirection, UltrafastCompoundMatrix};
use svdbf::coherence::{angular_coherence, coherence_factor_curve};
use svdbf::io::{AberrationKind, ExperimentConfig};
use svdbf::metrics::{contrast_db, lateral_resolution, phase_r2, Alignment, MaskRole, RegionMask};
use svdbf::svdcore::{extract_aberration, patch_svd, patch_svd_with_angles, PatchGrid};

fn random_matrix(seed: u64, rows: usize, cols: usize) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

fn angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| -0.3 + 0.6 * i as f64 / (n.max(2) - 1) as f64).collect()
}

fn small_array() -> TransducerArray {
    TransducerArray::new(16, 0.2e-3, 6.25e6, 25e6, 1540.0).unwrap()
}

fn pulse() -> PulseModel {
    PulseModel::new(6.25e6, 2.0).unwrap()
}

fn field(points: &[(f64, f64, f64)]) -> ScattererField {
    ScattererField::new(
        points.iter().map(|&(x, z, _)| (x, z)).collect(),
        points.iter().map(|&(_, _, a)| a).collect(),
    )
    .unwrap()
}

fn scatterers(max: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-1.5e-3..1.5e-3f64, 4e-3..7e-3f64, 0.1..2.0f64), 1..=max)
}

fn ucm(seed: u64, rows: usize, cols: usize) -> UltrafastCompoundMatrix {
    let grid = ImagingGrid::new(0.0, 1e-2, 1, rows, 1e-4, 5e-5).unwrap();
    UltrafastCompoundMatrix::new(grid, angles(cols), random_matrix(seed, rows, cols), 6.25e6, 1540.0).unwrap()
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn gaussian_row_image(nx: usize, centre: f64, width: f64, scale: f64) -> ComplexImage {
    let grid = ImagingGrid::new(-3e-3, 10e-3, nx, 3, 0.1e-3, 0.1e-3).unwrap();
    let pixels = (0..grid.n_pixels())
        .map(|p| {
            let (ix, iz) = grid.coords(p);
            let x = grid.x(ix);
            let row = if iz == 1 { 1.0 } else { 0.5 };
            Complex64::new(scale * row * (-(x - centre).powi(2) / (2.0 * width * width)).exp(), 0.0)
        })
        .collect();
    ComplexImage::new(grid, pixels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hadamard_commutes_with_diagonal(seed in any::<u64>()) {
        let b = random_matrix(seed, 5, 4);
        let c = random_matrix(seed ^ 1, 5, 4);
        let d = Array2::from_diag(&random_matrix(seed ^ 2, 4, 1).column(0).to_owned());
        let left = (&b * &c).dot(&d);
        let mid = &b.dot(&d) * &c;
        let right = &b * &c.dot(&d);
        for ((x, y), z) in left.iter().zip(mid.iter()).zip(right.iter()) {
            prop_assert!((x - y).norm() < 1e-12 && (x - z).norm() < 1e-12);
        }
    }

    #[test]
    fn simulation_is_linear_over_union(a in scatterers(3), b in scatterers(3)) {
        let (fa, fb) = (field(&a), field(&b));
        let union = fa.union(&fb);
        let array = small_array();
        let th = angles(3);
        let whole = simulate_rf(&array, &pulse(), &union, &th, None).unwrap();
        let window = TimeWindow { t0: whole.t0, n_samples: whole.n_samples };
        let ra = simulate_rf_window(&array, &pulse(), &fa, &th, None, window).unwrap();
        let rb = simulate_rf_window(&array, &pulse(), &fb, &th, None, window).unwrap();
        let sum = ra.add(&rb).unwrap();
        let peak = whole.samples().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(max_abs_diff(sum.samples(), whole.samples()) < 1e-10 * peak);
    }

    #[test]
    fn depth_shift_delays_the_echo(x in -1e-3..1e-3f64, z in 4e-3..6e-3f64, dz in 0.05e-3..0.3e-3f64) {
        let array = small_array();
        let el = (0..array.n_elements)
            .min_by(|&i, &j| (array.element_x()[i] - x).abs().total_cmp(&(array.element_x()[j] - x).abs()))
            .unwrap();
        let window = TimeWindow { t0: 0.0, n_samples: 256 };
        let arrival = |depth: f64| {
            let rf = simulate_rf_window(&array, &pulse(), &field(&[(x, depth, 1.0)]), &[0.0], None, window).unwrap();
            let tr = rf.trace(0, el);
            (0..tr.len()).max_by(|&i, &j| tr[i].norm().total_cmp(&tr[j].norm())).unwrap()
        };
        let shift = (arrival(z + dz) as f64 - arrival(z) as f64) / array.sampling_frequency;
        let expected = 2.0 * dz / array.sound_speed;
        prop_assert!((shift - expected).abs() <= 1.0 / array.sampling_frequency);
    }

    #[test]
    fn compound_of_forward_law_is_matrix_vector_product(seed in any::<u64>(), rows in 1usize..20, cols in 1usize..8) {
        let r = ucm(seed, rows, cols);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let delays: Vec<f64> = (0..cols).map(|_| (rng.random::<f64>() - 0.5) * 4e-7).collect();
        let amps: Vec<f64> = (0..cols).map(|_| 0.2 + rng.random::<f64>()).collect();
        let law = AngularAberration::new(r.angles.clone(), delays.clone(), amps.clone()).unwrap();
        let img = compound(&apply_angular_law(&r, &law, LawDirection::Forward).unwrap());
        let a: Vec<Complex64> = (0..cols)
            .map(|k| Complex64::from_polar(amps[k], -2.0 * PI * r.center_frequency * delays[k]))
            .collect();
        let want: Vec<Complex64> = (0..rows).map(|p| (0..cols).map(|k| r.data[[p, k]] * a[k]).sum()).collect();
        prop_assert!(max_abs_diff(&img.pixels, &want) < 1e-12);
    }

    #[test]
    fn leading_angular_vector_maximises_the_rayleigh_quotient(seed in any::<u64>(), cols in 2usize..10) {
        let r = random_matrix(seed, 4 * cols + 3, cols);
        let svd = patch_svd(r.view()).unwrap();
        let j = |x: &[Complex64]| {
            let n: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let rx: f64 = (0..r.nrows())
                .map(|p| (0..cols).map(|a| r[[p, a]] * x[a]).sum::<Complex64>().norm_sqr())
                .sum();
            rx / n
        };
        let best = j(&svd.angular_vector());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 11);
        for _ in 0..200 {
            let x: Vec<Complex64> = (0..cols).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            prop_assert!(j(&x) <= best * (1.0 + 1e-9));
        }
    }

    #[test]
    fn global_phase_leaves_the_law_unchanged(seed in any::<u64>(), psi in -PI..PI) {
        let r = random_matrix(seed, 40, 6);
        let th = angles(6);
        let rot = r.mapv(|z| z * Complex64::from_polar(1.0, psi));
        let a = extract_aberration(&patch_svd_with_angles(r.view(), &th).unwrap(), &th, 6.25e6).unwrap();
        let b = extract_aberration(&patch_svd_with_angles(rot.view(), &th).unwrap(), &th, 6.25e6).unwrap();
        for (x, y) in a.phase.iter().zip(&b.phase) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_scales_s1_only(seed in any::<u64>(), alpha in 1e-3..1e3f64) {
        let r = random_matrix(seed, 30, 5);
        let a = patch_svd(r.view()).unwrap();
        let b = patch_svd(r.mapv(|z| z * alpha).view()).unwrap();
        prop_assert!((b.s1() - alpha * a.s1()).abs() < 1e-9 * alpha * a.s1());
        prop_assert!(max_abs_diff(&a.angular_vector(), &b.angular_vector()) < 1e-9);
        prop_assert!(max_abs_diff(&a.spatial_vector(), &b.spatial_vector()) < 1e-9);
    }

    #[test]
    fn rank1_reconstruction_is_fully_coherent(seed in any::<u64>(), cols in 2usize..10) {
        let r = random_matrix(seed, 5 * cols, cols);
        let svd = patch_svd(r.view()).unwrap();
        let (u, v) = (svd.spatial_vector(), svd.angular_vector());
        let m = Array2::from_shape_fn((u.len(), cols), |(p, a)| svd.s1() * u[p] * v[a].conj());
        let c = angular_coherence(m.view(), &angles(cols), true).unwrap();
        prop_assert!(c.values.iter().all(|z| (z.norm() - 1.0).abs() < 1e-10));
    }

    #[test]
    fn coherence_modulus_ignores_unit_column_phases(seed in any::<u64>(), cols in 2usize..10) {
        let r = random_matrix(seed, 25, cols);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let d: Vec<Complex64> = (0..cols).map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())).collect();
        let rd = Array2::from_shape_fn(r.dim(), |(p, a)| r[[p, a]] * d[a]);
        for normalized in [false, true] {
            let c0 = angular_coherence(r.view(), &angles(cols), normalized).unwrap();
            let c1 = angular_coherence(rd.view(), &angles(cols), normalized).unwrap();
            let scale = c0.values.iter().fold(1.0f64, |m, z| m.max(z.norm()));
            for (x, y) in c0.values.iter().zip(c1.values.iter()) {
                prop_assert!((x.norm() - y.norm()).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn lag_zero_coherence_is_one(seed in any::<u64>(), cols in 2usize..12) {
        let r = random_matrix(seed, 20, cols);
        let c = angular_coherence(r.view(), &angles(cols), true).unwrap();
        let curve = coherence_factor_curve(&c).unwrap();
        prop_assert!((curve[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contrast_ignores_global_scale(seed in any::<u64>(), alpha in 1e-3..1e3f64) {
        let grid = ImagingGrid::new(0.0, 1e-2, 6, 6, 1e-4, 1e-4).unwrap();
        let img = ComplexImage::new(grid, random_matrix(seed, 36, 1).column(0).to_vec()).unwrap();
        let inside = RegionMask::new((0..12).collect::<BTreeSet<_>>(), MaskRole::Inside).unwrap();
        let outside = RegionMask::new((18..36).collect::<BTreeSet<_>>(), MaskRole::Outside).unwrap();
        let a = contrast_db(&img, &inside, &outside).unwrap();
        let b = contrast_db(&img.scaled(alpha), &inside, &outside).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn fwhm_ignores_scale_and_whole_pixel_shifts(
        centre in -0.5e-3..0.5e-3f64,
        width in 0.15e-3..0.4e-3f64,
        alpha in 1e-2..1e2f64,
        shift in -5i32..=5,
    ) {
        let base = gaussian_row_image(61, centre, width, 1.0);
        let w0 = lateral_resolution(&base, (centre, 10.1e-3)).unwrap();
        let scaled = lateral_resolution(&gaussian_row_image(61, centre, width, alpha), (centre, 10.1e-3)).unwrap();
        let moved_centre = centre + shift as f64 * 0.1e-3;
        let moved = lateral_resolution(&gaussian_row_image(61, moved_centre, width, 1.0), (moved_centre, 10.1e-3)).unwrap();
        prop_assert!((scaled - w0).abs() <= 0.01 * w0);
        prop_assert!((moved - w0).abs() <= 0.01 * w0);
    }

    #[test]
    fn identical_laws_have_unit_r2(phase in prop::collection::vec(-3.0..3.0f64, 3..20)) {
        let spread = phase.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - phase.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let th = angles(phase.len());
        let mask = vec![false; phase.len()];
        let v = phase_r2(&th, &phase, &phase, &mask, Alignment::None).unwrap().value().unwrap();
        prop_assert_eq!(v, 1.0);
    }

    #[test]
    fn config_round_trips_through_toml(
        n_elements in 8usize..256,
        count in 1usize..128,
        nx in 4usize..200,
        density in 0.0..10.0f64,
        kind in 0usize..4,
        seeds in prop::collection::vec(any::<u32>(), 1..5),
        pins in prop::collection::vec((-5e-3..5e-3f64, 5e-3..30e-3f64), 0..4),
    ) {
        let mut cfg = ExperimentConfig::default();
        cfg.array.n_elements = n_elements;
        cfg.angles.count = count;
        cfg.grid.nx = nx;
        cfg.phantom.speckle_density = density;
        cfg.phantom.pin_x = pins.iter().map(|p| p.0).collect();
        cfg.phantom.pin_z = pins.iter().map(|p| p.1).collect();
        cfg.aberration.kind = [AberrationKind::None, AberrationKind::AngularRandom, AberrationKind::AngularFile, AberrationKind::Screen][kind];
        if cfg.aberration.kind == AberrationKind::AngularFile {
            cfg.aberration.law_file = "law.csv".into();
        }
        cfg.run.seeds = seeds.iter().map(|&s| s as u64).collect();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn patches_cover_every_pixel(
        nx in 1usize..60,
        nz in 1usize..60,
        pnx in 1usize..70,
        pnz in 1usize..70,
        overlap in 0.0..0.9f64,
    ) {
        let grid = ImagingGrid::new(0.0, 1e-2, nx, nz, 1e-4, 1e-4).unwrap();
        let pg = PatchGrid::new(&grid, pnx, pnz, overlap).unwrap();
        prop_assert!(pg.coverage(&grid).iter().all(|&c| c >= 1));
        prop_assert!(pg.patches.iter().all(|p| p.ix1 <= nx && p.iz1 <= nz && p.nx() == pg.patch_nx && p.nz() == pg.patch_nz));
    }
}
