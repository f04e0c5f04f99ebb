use super::svd::{extract_aberration, patch_svd_with_angles, ExtractedAberration};
use crate::beamform::{PixelRect, UltrafastCompoundMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{phase_r2, Alignment, LawAgreement};

#[derive(Debug, Clone)]
pub struct SweepEntry {
    /// Requested `(nx, nz)` in pixels.
    pub size: (usize, usize),
    pub rect: PixelRect,
    pub law: ExtractedAberration,
    pub singular_values: Vec<f64>,
    pub s_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// Per-angle median of the laws across sizes.
    pub median_phase: Vec<f64>,
    /// r² of each law against the median law.
    pub r2_vs_median: Vec<LawAgreement>,
}

/// Rectangle of `nx x nz` pixels centred on `(ix, iz)`.
fn centered_rect(r: &UltrafastCompoundMatrix, center: (usize, usize), size: (usize, usize)) -> Result<PixelRect> {
    let (nx, nz) = size;
    let ix0 = center.0 as isize - (nx / 2) as isize;
    let iz0 = center.1 as isize - (nz / 2) as isize;
    if nx == 0 || nz == 0 || ix0 < 0 || iz0 < 0 {
        return Err(Error::Config(format!("patch {nx}x{nz} around {center:?} leaves the grid")));
    }
    let rect = PixelRect {
        ix0: ix0 as usize,
        ix1: ix0 as usize + nx,
        iz0: iz0 as usize,
        iz1: iz0 as usize + nz,
    };
    if rect.ix1 > r.grid.nx || rect.iz1 > r.grid.nz {
        return Err(Error::Config(format!("patch {nx}x{nz} around {center:?} leaves the grid")));
    }
    Ok(rect)
}

/// Extract the law from concentric patches of several sizes.
pub fn patch_size_sweep(
    r: &UltrafastCompoundMatrix,
    center: (usize, usize),
    sizes: &[(usize, usize)],
) -> Result<SweepResult> {
    if sizes.is_empty() {
        return Err(Error::Config("patch size sweep needs at least one size".into()));
    }
    let mut entries = Vec::with_capacity(sizes.len());
    for (k, &size) in sizes.iter().enumerate() {
        let rect = centered_rect(r, center, size)?;
        let m = r.patch(rect);
        let svd = patch_svd_with_angles(m.view(), &r.angles).map_err(|e| match e {
            Error::PatchTooSmall {
                n_pixels, n_angles, ..
            } => Error::PatchTooSmall {
                patch: k,
                n_pixels,
                n_angles,
            },
            other => other,
        })?;
        let mut law = extract_aberration(&svd, &r.angles, r.center_frequency)?;
        law.source_patch = Some(rect);
        entries.push(SweepEntry {
            size,
            rect,
            s_ratio: law.s_ratio,
            law,
            singular_values: svd.singular_values,
        });
    }
    let n = r.n_angles();
    let median_phase: Vec<f64> = (0..n)
        .map(|a| {
            let vals: Vec<f64> = entries
                .iter()
                .filter(|e| !e.law.masked[a])
                .map(|e| e.law.phase[a])
                .collect();
            if vals.is_empty() {
                0.0
            } else {
                linalg::median(&vals)
            }
        })
        .collect();
    let r2_vs_median = entries
        .iter()
        .map(|e| phase_r2(&r.angles, &e.law.phase, &median_phase, &e.law.masked, Alignment::None))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        entries,
        median_phase,
        r2_vs_median,
    })
}
