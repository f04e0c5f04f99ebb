//! Timing grid for beamforming and SVD correction over patch and angle
//! counts.

use std::fmt::Write as _;
use std::time::Instant;

use crate::arraysim::{
    build_phantom, simulate_rf, symmetric_angles, Extent, PhantomSpec, PulseModel, RFDataSet,
    TransducerArray,
};
use crate::beamform::{das_beamform, ImagingGrid, UltrafastCompoundMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::par;
use crate::svdcore::{svd_beamform, CorrectionMode, PatchGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    /// Square numbers; each becomes a `k x k` tiling of the grid.
    pub patch_counts: Vec<usize>,
    pub angle_counts: Vec<usize>,
    pub reps: usize,
    /// 0 uses the global pool.
    pub threads: usize,
    pub nx: usize,
    pub nz: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            patch_counts: vec![1, 9, 25, 100],
            angle_counts: vec![5, 10, 100],
            reps: 5,
            threads: 0,
            nx: 96,
            nz: 128,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n_patches: usize,
    /// Nominal patch size in pixels.
    pub patch_nx: usize,
    pub patch_nz: usize,
    pub n_angles: usize,
    /// Median wall-clock time of beamforming all angles, s.
    pub beamform_s: f64,
    /// Median wall-clock time of `svd_beamform`, s.
    pub svd_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub reps: usize,
    pub threads: usize,
    pub parallel: bool,
    pub machine: String,
}

impl BenchReport {
    pub fn row(&self, n_patches: usize, n_angles: usize) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.n_patches == n_patches && r.n_angles == n_angles)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_patches,patch_nx,patch_nz,n_angles,beamform_s,svd_s\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{:e}",
                r.n_patches, r.patch_nx, r.patch_nz, r.n_angles, r.beamform_s, r.svd_s
            );
        }
        s
    }

    /// `key = value` header followed by a fixed-width table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "machine = {}", self.machine);
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "parallel = {}", self.parallel);
        let _ = writeln!(s, "reps = {}", self.reps);
        let _ = writeln!(s, "statistic = median");
        let _ = writeln!(
            s,
            "{:>9} {:>9} {:>8} {:>12} {:>12}",
            "patches", "size", "angles", "beamform_s", "svd_s"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>9} {:>9} {:>8} {:>12.6} {:>12.6}",
                r.n_patches,
                format!("{}x{}", r.patch_nx, r.patch_nz),
                r.n_angles,
                r.beamform_s,
                r.svd_s
            );
        }
        s
    }
}

/// OS, architecture and available cores.
pub fn machine_descriptor() -> String {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{} cores={}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cores
    )
}

fn median_time<F: FnMut() -> Result<()>>(reps: usize, mut f: F) -> Result<f64> {
    // One untimed warm-up call.
    f()?;
    let mut t = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        f()?;
        t.push(start.elapsed().as_secs_f64());
    }
    Ok(linalg::median(&t))
}

/// `count` indices spread evenly over `0..n`.
fn spread(n: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![n / 2];
    }
    (0..count)
        .map(|i| (i as f64 * (n - 1) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// Channel data of a sparse speckle phantom at the largest angle count.
fn bench_data(opts: &BenchOptions, n_angles: usize) -> Result<(RFDataSet, ImagingGrid)> {
    let array = TransducerArray::new(64, 0.2e-3, 6.25e6, 25e6, 1540.0)?;
    let pulse = PulseModel::new(6.25e6, 2.0)?;
    let grid = ImagingGrid::centered(&array, 10e-3, opts.nx, opts.nz)?;
    let spec = PhantomSpec {
        extent: Extent {
            x_min: grid.x0,
            x_max: grid.x_max(),
            z_min: grid.z0,
            z_max: grid.z_max(),
        },
        speckle_density: 0.1,
        wavelength: array.wavelength(),
        pins: Vec::new(),
        cysts: Vec::new(),
        seed: opts.seed,
    };
    let field = build_phantom(&spec)?;
    let angles = symmetric_angles(n_angles, 36f64.to_radians());
    Ok((simulate_rf(&array, &pulse, &field, &angles, None)?, grid))
}

/// Time beamforming and SVD correction over the option grid. Every angle
/// subset is taken from one pre-beamformed matrix, so only the stage
/// under test varies.
pub fn run_bench(opts: &BenchOptions) -> Result<BenchReport> {
    if opts.reps < 5 {
        return Err(Error::Config(format!("bench needs at least 5 repetitions, got {}", opts.reps)));
    }
    if opts.angle_counts.is_empty() || opts.patch_counts.is_empty() {
        return Err(Error::Config("bench grid is empty".into()));
    }
    let tiles = opts
        .patch_counts
        .iter()
        .map(|&n| {
            let k = (n as f64).sqrt().round() as usize;
            if k * k != n || k == 0 {
                Err(Error::Config(format!("patch count {n} is not a positive square")))
            } else {
                Ok(k)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let max_angles = *opts.angle_counts.iter().max().unwrap_or(&1);
    if opts.angle_counts.contains(&0) {
        return Err(Error::Config("angle counts must be positive".into()));
    }

    par::with_threads(opts.threads, || {
        let (rf, grid) = bench_data(opts, max_angles)?;
        let full = das_beamform(&rf, &grid, 1.0)?;
        let mut rows = Vec::new();
        for &n_angles in &opts.angle_counts {
            let cols = spread(max_angles, n_angles);
            let rf_sub = rf.select_angles(&cols)?;
            let beamform_s = median_time(opts.reps, || das_beamform(&rf_sub, &grid, 1.0).map(|_| ()))?;
            let r = select_columns(&full, &cols)?;
            for (&n_patches, &k) in opts.patch_counts.iter().zip(&tiles) {
                let pg = PatchGrid::tiles(&grid, k, k)?;
                let svd_s = median_time(opts.reps, || {
                    svd_beamform(&r, &pg, CorrectionMode::Rank1).map(|_| ())
                })?;
                rows.push(BenchRow {
                    n_patches,
                    patch_nx: pg.patch_nx,
                    patch_nz: pg.patch_nz,
                    n_angles,
                    beamform_s,
                    svd_s,
                });
            }
        }
        Ok(BenchReport {
            rows,
            reps: opts.reps,
            threads: par::current_threads(),
            parallel: par::is_parallel(),
            machine: machine_descriptor(),
        })
    })
}

fn select_columns(r: &UltrafastCompoundMatrix, cols: &[usize]) -> Result<UltrafastCompoundMatrix> {
    let data = r.data.select(ndarray::Axis(1), cols);
    let mut out = UltrafastCompoundMatrix::new(
        r.grid,
        cols.iter().map(|&c| r.angles[c]).collect(),
        data,
        r.center_frequency,
        r.sound_speed,
    )?;
    out.out_of_window = r.out_of_window;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_has_every_row() {
        let opts = BenchOptions {
            patch_counts: vec![1, 4],
            angle_counts: vec![3, 6],
            reps: 5,
            nx: 16,
            nz: 16,
            ..BenchOptions::default()
        };
        let report = run_bench(&opts).unwrap();
        assert_eq!(report.rows.len(), 4);
        for p in [1, 4] {
            for a in [3, 6] {
                let r = report.row(p, a).unwrap();
                assert!(r.svd_s >= 0.0 && r.beamform_s >= 0.0);
            }
        }
        assert_eq!(report.row(4, 3).unwrap().patch_nx, 8);
        assert!(report.to_text().contains("machine = "));
        assert_eq!(report.to_csv().lines().count(), 5);
    }

    #[test]
    fn rejects_bad_grids() {
        let few = BenchOptions {
            reps: 2,
            ..BenchOptions::default()
        };
        assert!(matches!(run_bench(&few), Err(Error::Config(_))));
        let odd = BenchOptions {
            patch_counts: vec![8],
            ..BenchOptions::default()
        };
        assert!(matches!(run_bench(&odd), Err(Error::Config(_))));
    }

    #[test]
    fn spread_covers_the_ends() {
        assert_eq!(spread(100, 5), vec![0, 25, 50, 74, 99]);
        assert_eq!(spread(10, 10), (0..10).collect::<Vec<_>>());
    }
}
