//! End-to-end experiment runs: phantom, simulation, aberration,
//! beamforming, SVD correction, image metrics and angular coherence,
//! written as an output bundle with a manifest.

use std::fmt::Write as _;
use std::path::Path;

use crate::arraysim::{
    apply_angular_delay, build_phantom, random_smooth_law, sample_correlated_screen,
    simulate_rf, AngularAberration, ElementScreen, PulseModel, RFDataSet, ScattererField,
    TransducerArray,
};
use crate::beamform::{
    apply_angular_law, compound, das_beamform, ComplexImage, ImagingGrid, LawDirection,
    UltrafastCompoundMatrix,
};
use crate::coherence::{angular_coherence, coherence_factor_curve, triangle_fit, TriangleFit};
use crate::error::{Error, Result};
use crate::io::{self, AberrationKind, ExperimentConfig, Manifest, Sidecar};
use crate::linalg;
use crate::metrics::{self, Alignment, RegionMask};
use crate::par;
use crate::svdcore::{svd_beamform, CorrectionMode, ExtractedAberration, PatchGrid};

/// Seed offset of the random angular law relative to the phantom seed.
pub const LAW_SEED_OFFSET: u64 = 1000;
/// Seed offset of the element screen relative to the phantom seed.
pub const SCREEN_SEED_OFFSET: u64 = 2000;

/// Fixed geometry of an experiment.
#[derive(Debug, Clone)]
pub struct Scene {
    pub array: TransducerArray,
    pub pulse: PulseModel,
    pub angles: Vec<f64>,
    pub grid: ImagingGrid,
    pub patches: PatchGrid,
    pub f_number: f64,
}

impl Scene {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            array: cfg.transducer()?,
            pulse: cfg.pulse_model()?,
            angles: cfg.angle_set(),
            grid: cfg.imaging_grid()?,
            patches: cfg.patch_grid()?,
            f_number: cfg.grid.f_number,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.array.wavelength()
    }
}

/// Channel data of one seed with and without aberration.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub seed: u64,
    pub field: ScattererField,
    pub clean: RFDataSet,
    pub aberrated: RFDataSet,
    /// Known angular law, for the angular aberration kinds.
    pub truth: Option<AngularAberration>,
    pub screen: Option<ElementScreen>,
}

/// Build the phantom, simulate it and apply the configured aberration.
pub fn acquire(cfg: &ExperimentConfig, scene: &Scene, seed: u64) -> Result<Acquisition> {
    let field = build_phantom(&cfg.phantom_spec(seed)).map_err(|e| e.in_stage("phantom"))?;
    let clean = simulate_rf(&scene.array, &scene.pulse, &field, &scene.angles, None)
        .map_err(|e| e.in_stage("simulate"))?;
    let f0 = scene.array.center_frequency;
    let ab = &cfg.aberration;
    let (aberrated, truth, screen) = (|| -> Result<_> {
        Ok(match ab.kind {
            AberrationKind::None => (clean.clone(), Some(AngularAberration::identity(&scene.angles)), None),
            AberrationKind::AngularRandom => {
                let law = random_smooth_law(&scene.angles, f0, ab.law_spec(), seed + LAW_SEED_OFFSET)?;
                (apply_angular_delay(&clean, &law)?, Some(law), None)
            }
            AberrationKind::AngularFile => {
                let law = io::read_law_csv(&ab.law_file)?;
                law.check_angles(&scene.angles)?;
                (apply_angular_delay(&clean, &law)?, Some(law), None)
            }
            AberrationKind::Screen => {
                let screen = sample_correlated_screen(
                    &scene.array,
                    ab.screen_rms_delay,
                    ab.screen_correlation_length,
                    seed + SCREEN_SEED_OFFSET,
                )?
                .with_paths(ab.paths()?);
                let rf = simulate_rf(&scene.array, &scene.pulse, &field, &scene.angles, Some(&screen))?;
                (rf, None, Some(screen))
            }
        })
    })()
    .map_err(|e| e.in_stage("aberrate"))?;
    Ok(Acquisition {
        seed,
        field,
        clean,
        aberrated,
        truth,
        screen,
    })
}

/// Fine window around a pin for width measurements: 97 x 33 pixels at
/// `lambda / 8` laterally and 1/32 mm axially.
pub fn pin_window(pin: (f64, f64), wavelength: f64) -> Result<ImagingGrid> {
    let dx = wavelength / 8.0;
    ImagingGrid::new(pin.0 - 48.0 * dx, pin.1 - 0.5e-3, 97, 33, dx, 1e-3 / 32.0)
}

/// Pin widths (m) measured on the fine window. `None` when the
/// measurement hit the window edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinReport {
    pub x: f64,
    pub z: f64,
    pub fwhm_clean: Option<f64>,
    pub fwhm_aberrated: Option<f64>,
    pub fwhm_corrected: Option<f64>,
}

/// Measure one pin. The fine aberrated matrix is corrected with the law of
/// the patch nearest the pin.
pub fn measure_pin(
    scene: &Scene,
    acq: &Acquisition,
    laws: &[ExtractedAberration],
    pin: (f64, f64),
) -> Result<PinReport> {
    let window = pin_window(pin, scene.wavelength())?;
    let (ix, iz) = scene
        .grid
        .nearest(pin.0, pin.1)
        .ok_or_else(|| Error::Config(format!("pin at {pin:?} lies outside the imaging grid")))?;
    let k = scene
        .patches
        .nearest_patch(ix, iz)
        .ok_or_else(|| Error::Config("no patches".into()))?;
    let est = AngularAberration::from_delays(scene.angles.clone(), laws[k].delays())?;
    let fine_clean = das_beamform(&acq.clean, &window, scene.f_number)?;
    let fine_ab = das_beamform(&acq.aberrated, &window, scene.f_number)?;
    let fine_corr = apply_angular_law(&fine_ab, &est, LawDirection::Conjugate)?;
    let width = |r: &UltrafastCompoundMatrix| metrics::lateral_resolution(&compound(r), pin).ok();
    Ok(PinReport {
        x: pin.0,
        z: pin.1,
        fwhm_clean: width(&fine_clean),
        fwhm_aberrated: width(&fine_ab),
        fwhm_corrected: width(&fine_corr),
    })
}

/// Coherence of one patch of `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub curve: Vec<f64>,
    /// `None` when the curve decays too fast for a fit.
    pub fit: Option<TriangleFit>,
}

pub fn patch_coherence(r: &UltrafastCompoundMatrix, rect: crate::beamform::PixelRect) -> Result<CoherenceReport> {
    let m = r.patch(rect);
    let c = angular_coherence(m.view(), &r.angles, true)?;
    let curve = coherence_factor_curve(&c)?;
    let fit = triangle_fit(&curve).ok();
    Ok(CoherenceReport { curve, fit })
}

/// Everything measured for one seed.
#[derive(Debug, Clone)]
pub struct SeedReport {
    pub seed: u64,
    pub n_scatterers: usize,
    pub contrast_clean_db: Option<f64>,
    pub contrast_aberrated_db: Option<f64>,
    pub contrast_corrected_db: Option<f64>,
    pub pins: Vec<PinReport>,
    /// Median over patches of the offset-aligned phase r² against the known
    /// law.
    pub law_r2_median: Option<f64>,
    pub s_ratio_median: f64,
    pub coherence_clean: CoherenceReport,
    pub coherence_aberrated: CoherenceReport,
    pub out_of_window: usize,
    pub laws: Vec<ExtractedAberration>,
}

/// Images produced for one seed.
#[derive(Debug, Clone)]
pub struct SeedImages {
    pub clean: ComplexImage,
    pub aberrated: ComplexImage,
    pub corrected: ComplexImage,
    pub r_aberrated: UltrafastCompoundMatrix,
}

/// Run every processing stage on one acquisition.
pub fn process(
    cfg: &ExperimentConfig,
    scene: &Scene,
    acq: &Acquisition,
) -> Result<(SeedReport, SeedImages)> {
    let (r_clean, r_ab) = (|| -> Result<_> {
        Ok((
            das_beamform(&acq.clean, &scene.grid, scene.f_number)?,
            das_beamform(&acq.aberrated, &scene.grid, scene.f_number)?,
        ))
    })()
    .map_err(|e| e.in_stage("beamform"))?;
    let mode: CorrectionMode = cfg.correction_mode()?;
    let corrected = svd_beamform(&r_ab, &scene.patches, mode).map_err(|e| e.in_stage("correct"))?;
    let images = SeedImages {
        clean: compound(&r_clean),
        aberrated: compound(&r_ab),
        corrected: corrected.image.clone(),
        r_aberrated: r_ab,
    };

    let f0 = scene.array.center_frequency;
    let metrics_stage = || -> Result<_> {
        let contrast = match cfg.cyst() {
            Some(cyst) => {
                let (inside, outside) = RegionMask::cyst_default(&scene.grid, &cyst)?;
                let c = |img: &ComplexImage| metrics::contrast_db(img, &inside, &outside).map(Some);
                (c(&images.clean)?, c(&images.aberrated)?, c(&images.corrected)?)
            }
            None => (None, None, None),
        };
        let pins = cfg
            .pins()
            .iter()
            .map(|p| measure_pin(scene, acq, &corrected.laws, (p.x, p.z)))
            .collect::<Result<Vec<_>>>()?;
        let law_r2_median = match &acq.truth {
            Some(truth) if truth.delays.iter().any(|&d| d != 0.0) => {
                let r2 = corrected
                    .laws
                    .iter()
                    .map(|l| metrics::phase_law_r2(l, truth, f0, Alignment::Offset))
                    .collect::<Result<Vec<_>>>()?;
                let vals: Vec<f64> = r2.iter().filter_map(|a| a.value()).collect();
                (!vals.is_empty()).then(|| linalg::median(&vals))
            }
            _ => None,
        };
        Ok((contrast, pins, law_r2_median))
    };
    let (contrast, pins, law_r2_median) = metrics_stage().map_err(|e| e.in_stage("metrics"))?;

    let centre = scene
        .patches
        .nearest_patch(scene.grid.nx / 2, scene.grid.nz / 2)
        .map(|k| scene.patches.patches[k])
        .ok_or_else(|| Error::Config("no patches".into()))?;
    let (coherence_clean, coherence_aberrated) = (|| -> Result<_> {
        Ok((
            patch_coherence(&r_clean, centre)?,
            patch_coherence(&images.r_aberrated, centre)?,
        ))
    })()
    .map_err(|e| e.in_stage("coherence"))?;

    let ratios: Vec<f64> = corrected.laws.iter().map(|l| l.s_ratio).collect();
    let report = SeedReport {
        seed: acq.seed,
        n_scatterers: acq.field.len(),
        contrast_clean_db: contrast.0,
        contrast_aberrated_db: contrast.1,
        contrast_corrected_db: contrast.2,
        pins,
        law_r2_median,
        s_ratio_median: linalg::median(&ratios),
        coherence_clean,
        coherence_aberrated,
        out_of_window: images.r_aberrated.out_of_window,
        laws: corrected.laws,
    };
    Ok((report, images))
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub seeds: Vec<SeedReport>,
    pub manifest: Manifest,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

/// `key = value` lines for one seed, keys prefixed with `seed_<n>.`.
pub fn seed_report_text(r: &SeedReport) -> String {
    let mut s = String::new();
    let p = format!("seed_{}", r.seed);
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{p}.{k} = {v}");
    };
    kv("n_scatterers", r.n_scatterers.to_string());
    kv("contrast_clean_db", opt(r.contrast_clean_db));
    kv("contrast_aberrated_db", opt(r.contrast_aberrated_db));
    kv("contrast_corrected_db", opt(r.contrast_corrected_db));
    for (i, pin) in r.pins.iter().enumerate() {
        kv(&format!("pin_{i}.position_m"), format!("{},{}", pin.x, pin.z));
        kv(&format!("pin_{i}.fwhm_clean_m"), opt(pin.fwhm_clean));
        kv(&format!("pin_{i}.fwhm_aberrated_m"), opt(pin.fwhm_aberrated));
        kv(&format!("pin_{i}.fwhm_corrected_m"), opt(pin.fwhm_corrected));
    }
    kv("law_r2_median", opt(r.law_r2_median));
    kv("s_ratio_median", r.s_ratio_median.to_string());
    for (name, c) in [("clean", &r.coherence_clean), ("aberrated", &r.coherence_aberrated)] {
        kv(&format!("coherence_{name}.zero_lag_extrapolation"), opt(c.fit.map(|f| f.zero_lag_extrapolation)));
        kv(&format!("coherence_{name}.slope"), opt(c.fit.map(|f| f.slope)));
        kv(&format!("coherence_{name}.r2"), opt(c.fit.map(|f| f.r2)));
    }
    kv("out_of_window", r.out_of_window.to_string());
    s
}

/// Run the configured experiment for every seed and write the bundle into
/// `out_dir`: images, law tables, coherence curves, `report.txt`, the
/// resolved `config.toml` and a `MANIFEST` of all of them.
///
/// On failure the manifest is still written, marked incomplete and listing
/// the files finished so far. `threads` overrides `cfg.run.threads`; the
/// written bundle does not depend on it.
pub fn run_pipeline(cfg: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<PipelineReport> {
    let threads = threads.unwrap_or(cfg.run.threads);
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let result = par::with_threads(threads, || run_into(cfg, out_dir, &mut written));
    match result {
        Ok(seeds) => {
            let manifest = Manifest::from_files(out_dir, true, None, &written)?;
            manifest.write(out_dir)?;
            Ok(PipelineReport { seeds, manifest })
        }
        Err(e) => {
            let manifest = Manifest::from_files(out_dir, false, Some(e.to_string()), &written)?;
            manifest.write(out_dir)?;
            Err(e)
        }
    }
}

fn run_into(cfg: &ExperimentConfig, out: &Path, written: &mut Vec<String>) -> Result<Vec<SeedReport>> {
    let scene = Scene::from_config(cfg)?;
    let format = cfg.image_format()?;
    let dr = cfg.output.dynamic_range_db;
    let f0 = scene.array.center_frequency;

    let mut recorded = cfg.clone();
    recorded.run.threads = 0;
    recorded.output.directory = std::path::PathBuf::from(".");
    recorded.save(&out.join("config.toml"))?;
    written.push("config.toml".into());

    let mut reports = Vec::with_capacity(cfg.run.seeds.len());
    let mut text = String::new();
    let _ = writeln!(
        text,
        "seeds = {}",
        cfg.run.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(text, "correction_mode = {}", cfg.correction.mode);
    let _ = writeln!(text, "patches = {}", scene.patches.len());
    let _ = writeln!(text, "patch_pixels = {}x{}", scene.patches.patch_nx, scene.patches.patch_nz);

    for &seed in &cfg.run.seeds {
        let acq = acquire(cfg, &scene, seed)?;
        let (report, images) = process(cfg, &scene, &acq)?;

        let write_stage = |written: &mut Vec<String>| -> Result<()> {
            let dir = format!("seed_{seed}");
            std::fs::create_dir_all(out.join(&dir))?;
            let rel = |name: String, written: &mut Vec<String>| {
                let r = format!("{dir}/{name}");
                written.push(r.clone());
                out.join(r)
            };
            for (name, img) in [
                ("clean", &images.clean),
                ("aberrated", &images.aberrated),
                ("corrected", &images.corrected),
            ] {
                let path = rel(format!("image_{name}.{}", format.extension()), written);
                io::export_image(img, &path, format, dr)?;
            }
            io::write_patch_laws_csv(&rel("patch_laws.csv".into(), written), &report.laws)?;
            if let Some(truth) = &acq.truth {
                io::write_aberration_csv(&rel("true_law.csv".into(), written), truth, f0)?;
            }
            for (name, c) in [("clean", &report.coherence_clean), ("aberrated", &report.coherence_aberrated)] {
                io::write_xy_csv(
                    &rel(format!("coherence_{name}.csv"), written),
                    ("lag", "coherence"),
                    c.curve.iter().enumerate().map(|(k, &v)| (k as f64, v)),
                )?;
            }
            if cfg.output.write_raw {
                let mut meta = Sidecar::default();
                meta.set("pulse_cycles", scene.pulse.n_cycles);
                meta.set("seed", seed);
                let rf_path = rel("rf_aberrated.ufrf".into(), written);
                io::write_rf(&rf_path, &acq.aberrated, &meta)?;
                written.push(format!("{dir}/rf_aberrated.ufrf.meta"));
                io::write_ufcm(&rel("ufcm_aberrated.ufcm".into(), written), &images.r_aberrated)?;
            }
            Ok(())
        };
        write_stage(written).map_err(|e| e.in_stage("write"))?;
        text.push_str(&seed_report_text(&report));
        reports.push(report);
    }

    std::fs::write(out.join("report.txt"), text)?;
    written.push("report.txt".into());
    Ok(reports)
}
