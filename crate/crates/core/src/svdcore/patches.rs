use crate::beamform::{ImagingGrid, PixelRect};
use crate::error::{Error, Result};

/// Rectangular patches tiling an imaging grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub patch_nx: usize,
    pub patch_nz: usize,
    pub overlap_fraction: f64,
    pub patches: Vec<PixelRect>,
}

impl PatchGrid {
    /// Patches of `patch_nx x patch_nz` pixels (clipped to the grid) whose
    /// starts advance by `(1 - overlap)` of the patch size. The last row
    /// and column of patches are pinned to the grid edge so every pixel is
    /// covered.
    pub fn new(grid: &ImagingGrid, patch_nx: usize, patch_nz: usize, overlap: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::Config(format!("overlap {overlap} must be in [0, 1)")));
        }
        if patch_nx == 0 || patch_nz == 0 {
            return Err(Error::Config("patch dimensions must be positive".into()));
        }
        let pnx = patch_nx.min(grid.nx);
        let pnz = patch_nz.min(grid.nz);
        let xs = starts(grid.nx, pnx, overlap);
        let zs = starts(grid.nz, pnz, overlap);
        let patches = xs
            .iter()
            .flat_map(|&ix| {
                zs.iter().map(move |&iz| PixelRect {
                    ix0: ix,
                    ix1: ix + pnx,
                    iz0: iz,
                    iz1: iz + pnz,
                })
            })
            .collect();
        Ok(Self {
            patch_nx: pnx,
            patch_nz: pnz,
            overlap_fraction: overlap,
            patches,
        })
    }

    /// Patch size given in wavelengths (lateral x axial).
    pub fn from_wavelengths(
        grid: &ImagingGrid,
        wavelength: f64,
        lateral: f64,
        axial: f64,
        overlap: f64,
    ) -> Result<Self> {
        let nx = ((lateral * wavelength / grid.dx).round() as usize).max(1);
        let nz = ((axial * wavelength / grid.dz).round() as usize).max(1);
        Self::new(grid, nx, nz, overlap)
    }

    /// Non-overlapping partition into `nx_tiles x nz_tiles` near-equal
    /// patches.
    pub fn tiles(grid: &ImagingGrid, nx_tiles: usize, nz_tiles: usize) -> Result<Self> {
        if nx_tiles == 0 || nz_tiles == 0 || nx_tiles > grid.nx || nz_tiles > grid.nz {
            return Err(Error::Config(format!(
                "cannot split a {}x{} grid into {}x{} tiles",
                grid.nx, grid.nz, nx_tiles, nz_tiles
            )));
        }
        let cut = |n: usize, k: usize| -> Vec<usize> { (0..=k).map(|i| i * n / k).collect() };
        let cx = cut(grid.nx, nx_tiles);
        let cz = cut(grid.nz, nz_tiles);
        let mut patches = Vec::with_capacity(nx_tiles * nz_tiles);
        for i in 0..nx_tiles {
            for k in 0..nz_tiles {
                patches.push(PixelRect {
                    ix0: cx[i],
                    ix1: cx[i + 1],
                    iz0: cz[k],
                    iz1: cz[k + 1],
                });
            }
        }
        Ok(Self {
            patch_nx: grid.nx / nx_tiles,
            patch_nz: grid.nz / nz_tiles,
            overlap_fraction: 0.0,
            patches,
        })
    }

    /// Single patch covering the whole grid.
    pub fn whole(grid: &ImagingGrid) -> Self {
        Self {
            patch_nx: grid.nx,
            patch_nz: grid.nz,
            overlap_fraction: 0.0,
            patches: vec![PixelRect::full(grid)],
        }
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Number of patches covering each grid pixel.
    pub fn coverage(&self, grid: &ImagingGrid) -> Vec<usize> {
        let mut count = vec![0; grid.n_pixels()];
        for rect in &self.patches {
            for p in rect.pixel_indices(grid) {
                count[p] += 1;
            }
        }
        count
    }

    /// Patch whose centre is closest to pixel `(ix, iz)`.
    pub fn nearest_patch(&self, ix: usize, iz: usize) -> Option<usize> {
        self.patches
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let d = |r: &PixelRect| {
                    let (cx, cz) = r.center();
                    (cx - ix as f64).powi(2) + (cz - iz as f64).powi(2)
                };
                d(a).total_cmp(&d(b))
            })
            .map(|(i, _)| i)
    }
}

fn starts(n: usize, size: usize, overlap: f64) -> Vec<usize> {
    let stride = ((size as f64 * (1.0 - overlap)).round() as usize).max(1);
    let mut out = Vec::new();
    let mut s = 0;
    loop {
        if s + size >= n {
            out.push(n - size);
            break;
        }
        out.push(s);
        s += stride;
    }
    out.dedup();
    out
}
