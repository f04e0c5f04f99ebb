//! Extraction error against the injected law shrinks as patches grow.

use svdbf::beamform::das_beamform;
use svdbf::io::ExperimentConfig;
use svdbf::linalg::median;
use svdbf::metrics::{phase_law_r2, Alignment};
use svdbf::pipeline::{acquire, Scene};
use svdbf::svdcore::patch_size_sweep;

#[test]
fn extraction_error_falls_with_patch_size() {
    let mut cfg = ExperimentConfig::default();
    cfg.angles.count = 16;
    cfg.grid.nz = 48;
    cfg.phantom.z_max = 18.5e-3;
    cfg.phantom.cyst_radius = 0.0;
    cfg.phantom.pin_x.clear();
    cfg.phantom.pin_z.clear();
    let scene = Scene::from_config(&cfg).unwrap();
    let centre = (scene.grid.nx / 2, scene.grid.nz / 2);
    let sizes = [(6, 8), (12, 16), (24, 32)];
    let mut errors = vec![Vec::new(); sizes.len()];
    for seed in 1..=10 {
        let acq = acquire(&cfg, &scene, seed).unwrap();
        let truth = acq.truth.as_ref().unwrap();
        let r = das_beamform(&acq.aberrated, &scene.grid, scene.f_number).unwrap();
        let sweep = patch_size_sweep(&r, centre, &sizes).unwrap();
        for (k, e) in sweep.entries.iter().enumerate() {
            let r2 = phase_law_r2(&e.law, truth, r.center_frequency, Alignment::Offset)
                .unwrap()
                .value()
                .unwrap();
            errors[k].push(1.0 - r2);
        }
    }
    let m: Vec<f64> = errors.iter().map(|e| median(e)).collect();
    println!("median 1 - r2 for {sizes:?}: {m:?}");
    assert!(m[0] > m[1] && m[1] > m[2], "{m:?}");
}
