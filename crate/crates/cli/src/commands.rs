use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use svdbf::arraysim::{simulate_rf, AngularAberration};
use svdbf::beamform::{compound, das_beamform, ComplexImage, UltrafastCompoundMatrix};
use svdbf::bench::{run_bench, BenchOptions};
use svdbf::io::{self, AberrationKind, ExperimentConfig, ImageFormat, Sidecar};
use svdbf::metrics::{self, Alignment, RegionMask};
use svdbf::pipeline::{self, Scene};
use svdbf::svdcore::{patch_size_sweep, svd_beamform, CorrectionMode};
use svdbf::{par, Error, Result};

use crate::{Command, Common};

struct Context {
    cfg: ExperimentConfig,
    out: PathBuf,
    format: ImageFormat,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = common.seed {
            cfg.run.seeds = vec![s];
        }
        if let Some(f) = &common.format {
            cfg.output.format = f.clone();
        }
        if let Some(t) = common.threads {
            cfg.run.threads = t;
        }
        if let Some(o) = &common.out {
            cfg.output.directory = o.clone();
        }
        cfg.validate()?;
        let format = cfg.image_format()?;
        let out = cfg.output.directory.clone();
        std::fs::create_dir_all(&out)?;
        Ok(Self { cfg, out, format })
    }

    fn seed(&self) -> u64 {
        self.cfg.run.seeds[0]
    }

    fn image(&self, name: &str, image: &ComplexImage) -> Result<PathBuf> {
        let path = self.out.join(format!("{name}.{}", self.format.extension()));
        io::export_image(image, &path, self.format, self.cfg.output.dynamic_range_db)?;
        Ok(path)
    }
}

pub fn run(common: &Common, command: &Command) -> Result<()> {
    let ctx = Context::new(common)?;
    par::with_threads(ctx.cfg.run.threads, || dispatch(&ctx, command))
}

fn dispatch(ctx: &Context, command: &Command) -> Result<()> {
    match command {
        Command::Phantom => phantom(ctx),
        Command::Simulate { phantom } => simulate(ctx, phantom.as_deref()),
        Command::Beamform { rf } => beamform(ctx, rf),
        Command::Correct { ufcm, mode } => correct(ctx, ufcm, mode.as_deref()),
        Command::Coherence { ufcm, center } => coherence(ctx, ufcm, center.as_deref()),
        Command::Metrics { ufcm, truth } => metrics_cmd(ctx, ufcm, truth.as_deref()),
        Command::SweepPatch {
            ufcm,
            sizes,
            center,
        } => sweep(ctx, ufcm, sizes, center.as_deref()),
        Command::Bench {
            reps,
            patches,
            angles,
        } => bench(ctx, *reps, patches, angles),
        Command::Pipeline => {
            let report = pipeline::run_pipeline(&ctx.cfg, &ctx.out, None)?;
            for s in &report.seeds {
                print!("{}", pipeline::seed_report_text(s));
            }
            println!("manifest = {}", ctx.out.join(io::MANIFEST_NAME).display());
            Ok(())
        }
    }
}

fn phantom(ctx: &Context) -> Result<()> {
    let field = svdbf::arraysim::build_phantom(&ctx.cfg.phantom_spec(ctx.seed()))?;
    let path = ctx.out.join("phantom.csv");
    io::write_scatterers_csv(&path, &field)?;
    println!("scatterers = {}", field.len());
    println!("file = {}", path.display());
    Ok(())
}

fn simulate(ctx: &Context, phantom: Option<&Path>) -> Result<()> {
    let scene = Scene::from_config(&ctx.cfg)?;
    let seed = ctx.seed();
    let (rf, truth) = match phantom {
        Some(p) => {
            if ctx.cfg.aberration.kind != AberrationKind::None {
                return Err(Error::Config(
                    "--phantom only supports aberration kind none".into(),
                ));
            }
            let field = io::read_scatterers_csv(p)?;
            (simulate_rf(&scene.array, &scene.pulse, &field, &scene.angles, None)?, None)
        }
        None => {
            let acq = pipeline::acquire(&ctx.cfg, &scene, seed)?;
            (acq.aberrated, acq.truth)
        }
    };
    let mut meta = Sidecar::default();
    meta.set("pulse_cycles", scene.pulse.n_cycles);
    meta.set("seed", seed);
    let path = ctx.out.join("rf.ufrf");
    io::write_rf(&path, &rf, &meta)?;
    println!("angles = {}", rf.n_angles());
    println!("samples = {}", rf.n_samples);
    println!("file = {}", path.display());
    if let Some(t) = truth.filter(|_| ctx.cfg.aberration.kind != AberrationKind::None) {
        let law = ctx.out.join("true_law.csv");
        io::write_aberration_csv(&law, &t, scene.array.center_frequency)?;
        println!("law = {}", law.display());
    }
    Ok(())
}

fn beamform(ctx: &Context, rf_path: &Path) -> Result<()> {
    let (rf, _) = io::read_rf(rf_path)?;
    let grid = ctx.cfg.imaging_grid()?;
    let r = das_beamform(&rf, &grid, ctx.cfg.grid.f_number)?;
    let path = ctx.out.join("ufcm.ufcm");
    io::write_ufcm(&path, &r)?;
    let img = ctx.image("image_compound", &compound(&r))?;
    println!("pixels = {}", r.n_pixels());
    println!("angles = {}", r.n_angles());
    println!("out_of_window = {}", r.out_of_window);
    println!("file = {}", path.display());
    println!("image = {}", img.display());
    Ok(())
}

fn correct(ctx: &Context, ufcm: &Path, mode: Option<&str>) -> Result<()> {
    let r = io::read_ufcm(ufcm)?;
    let mode: CorrectionMode = match mode {
        Some(m) => m.parse()?,
        None => ctx.cfg.correction_mode()?,
    };
    let patches = patch_grid_for(ctx, &r)?;
    let out = svd_beamform(&r, &patches, mode)?;
    let img = ctx.image("image_corrected", &out.image)?;
    let laws = ctx.out.join("patch_laws.csv");
    io::write_patch_laws_csv(&laws, &out.laws)?;
    let mut sv = String::from("patch,index,singular_value\n");
    for (k, s) in out.singular_values.iter().enumerate() {
        for (i, v) in s.iter().enumerate() {
            let _ = writeln!(sv, "{k},{i},{v:e}");
        }
    }
    std::fs::write(ctx.out.join("singular_values.csv"), sv)?;
    println!("patches = {}", patches.len());
    println!("image = {}", img.display());
    println!("laws = {}", laws.display());
    Ok(())
}

/// Patches from the config, built on the grid stored in the matrix.
fn patch_grid_for(ctx: &Context, r: &UltrafastCompoundMatrix) -> Result<svdbf::svdcore::PatchGrid> {
    let l = r.sound_speed / r.center_frequency;
    let p = &ctx.cfg.patches;
    svdbf::svdcore::PatchGrid::from_wavelengths(
        &r.grid,
        l,
        p.lateral_wavelengths,
        p.axial_wavelengths,
        p.overlap,
    )
}

fn parse_pair(s: &str, sep: char) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("expected two integers separated by '{sep}', got '{s}'"));
    let (a, b) = s.split_once(sep).ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("'{v}' is not a count")))
        })
        .collect()
}

fn center_of(r: &UltrafastCompoundMatrix, center: Option<&str>) -> Result<(usize, usize)> {
    match center {
        Some(c) => parse_pair(c, ','),
        None => Ok((r.grid.nx / 2, r.grid.nz / 2)),
    }
}

fn coherence(ctx: &Context, ufcm: &Path, center: Option<&str>) -> Result<()> {
    let r = io::read_ufcm(ufcm)?;
    let (ix, iz) = center_of(&r, center)?;
    let patches = patch_grid_for(ctx, &r)?;
    let k = patches
        .nearest_patch(ix, iz)
        .ok_or_else(|| Error::Config("no patches".into()))?;
    let rect = patches.patches[k];
    let c = pipeline::patch_coherence(&r, rect)?;
    let path = ctx.out.join("coherence.csv");
    io::write_xy_csv(
        &path,
        ("lag", "coherence"),
        c.curve.iter().enumerate().map(|(k, &v)| (k as f64, v)),
    )?;
    println!("patch = {k}");
    match c.fit {
        Some(f) => {
            println!("slope = {}", f.slope);
            println!("zero_lag_extrapolation = {}", f.zero_lag_extrapolation);
            println!("r2 = {}", f.r2);
            println!("last_lag = {}", f.last_lag);
        }
        None => println!("fit = none"),
    }
    println!("file = {}", path.display());
    Ok(())
}

fn metrics_cmd(ctx: &Context, ufcm: &Path, truth: Option<&Path>) -> Result<()> {
    let r = io::read_ufcm(ufcm)?;
    let patches = patch_grid_for(ctx, &r)?;
    let corrected = svd_beamform(&r, &patches, ctx.cfg.correction_mode()?)?;
    let before = compound(&r);
    let mut text = String::new();
    if let Some(cyst) = ctx.cfg.cyst() {
        let (inside, outside) = RegionMask::cyst_default(&r.grid, &cyst)?;
        let a = metrics::contrast_db(&before, &inside, &outside)?;
        let b = metrics::contrast_db(&corrected.image, &inside, &outside)?;
        let _ = writeln!(text, "contrast_before_db = {a}");
        let _ = writeln!(text, "contrast_after_db = {b}");
        let _ = writeln!(text, "contrast_improvement_db = {}", a - b);
    }
    for (i, pin) in ctx.cfg.pins().iter().enumerate() {
        for (name, img) in [("before", &before), ("after", &corrected.image)] {
            let v = metrics::lateral_resolution(img, (pin.x, pin.z))
                .map_or_else(|e| format!("none ({e})"), |w| w.to_string());
            let _ = writeln!(text, "pin_{i}.fwhm_{name}_m = {v}");
        }
    }
    if let Some(t) = truth {
        let law: AngularAberration = io::read_law_csv(t)?;
        let r2 = corrected
            .laws
            .iter()
            .map(|l| metrics::phase_law_r2(l, &law, r.center_frequency, Alignment::Offset))
            .collect::<Result<Vec<_>>>()?;
        let vals: Vec<f64> = r2.iter().filter_map(|a| a.value()).collect();
        if vals.is_empty() {
            let _ = writeln!(text, "law_r2_median = none");
        } else {
            let _ = writeln!(text, "law_r2_median = {}", svdbf::linalg::median(&vals));
        }
    }
    std::fs::write(ctx.out.join("metrics.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn sweep(ctx: &Context, ufcm: &Path, sizes: &str, center: Option<&str>) -> Result<()> {
    let r = io::read_ufcm(ufcm)?;
    let sizes = sizes
        .split(',')
        .map(|s| parse_pair(s, 'x'))
        .collect::<Result<Vec<_>>>()?;
    let c = center_of(&r, center)?;
    let result = patch_size_sweep(&r, c, &sizes)?;
    let mut csv = String::from("nx,nz,n_pixels,s_ratio,r2_vs_median\n");
    for (e, a) in result.entries.iter().zip(&result.r2_vs_median) {
        let r2 = a.value().map_or_else(|| "nan".to_string(), |v| format!("{v:e}"));
        let _ = writeln!(
            csv,
            "{},{},{},{:e},{}",
            e.size.0,
            e.size.1,
            e.rect.n_pixels(),
            e.s_ratio,
            r2
        );
        io::write_law_csv(
            &ctx.out.join(format!("sweep_law_{}x{}.csv", e.size.0, e.size.1)),
            &e.law,
        )?;
    }
    let path = ctx.out.join("sweep.csv");
    std::fs::write(&path, &csv)?;
    print!("{csv}");
    Ok(())
}

fn bench(ctx: &Context, reps: usize, patches: &str, angles: &str) -> Result<()> {
    let opts = BenchOptions {
        patch_counts: parse_list(patches)?,
        angle_counts: parse_list(angles)?,
        reps,
        threads: ctx.cfg.run.threads,
        seed: ctx.seed(),
        ..BenchOptions::default()
    };
    let report = run_bench(&opts)?;
    std::fs::write(ctx.out.join("bench.txt"), report.to_text())?;
    std::fs::write(ctx.out.join("bench.csv"), report.to_csv())?;
    print!("{}", report.to_text());
    Ok(())
}
