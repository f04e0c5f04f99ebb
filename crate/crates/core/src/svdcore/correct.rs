use ndarray::ArrayView2;
use num_complex::Complex64;

use super::svd::{extract_aberration, patch_svd_with_angles, ExtractedAberration, PatchSVD};
use super::PatchGrid;
use crate::beamform::{ComplexImage, UltrafastCompoundMatrix};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionMode {
    /// `s1 * u1 * sum_theta |v1|`: the compound of the rank-1 filtered
    /// matrix after removing the phase of `v1`.
    Rank1,
    /// `sum_theta R[p, theta] * v1[theta] / |v1[theta]|`.
    PhaseConjugate,
}

impl std::str::FromStr for CorrectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank1" => Ok(Self::Rank1),
            "phase_conjugate" | "phase-conjugate" => Ok(Self::PhaseConjugate),
            _ => Err(Error::Config(format!("unknown correction mode '{s}'"))),
        }
    }
}

fn corrected_values(r: ArrayView2<'_, Complex64>, svd: &PatchSVD, mode: CorrectionMode) -> Vec<Complex64> {
    let v = svd.angular_vector();
    match mode {
        CorrectionMode::Rank1 => {
            let scale = svd.s1() * v.iter().map(|z| z.norm()).sum::<f64>();
            svd.spatial_vectors.column(0).iter().map(|u| u * scale).collect()
        }
        CorrectionMode::PhaseConjugate => {
            let w: Vec<Complex64> = v
                .iter()
                .map(|z| {
                    let n = z.norm();
                    if n > 0.0 {
                        z / n
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            (0..r.nrows())
                .map(|p| w.iter().enumerate().map(|(a, wa)| r[[p, a]] * wa).sum())
                .collect()
        }
    }
}

/// Corrected image of one patch, in the patch's row order.
pub fn correct_patch(
    r_patch: ArrayView2<'_, Complex64>,
    angles: &[f64],
    mode: CorrectionMode,
) -> Result<Vec<Complex64>> {
    let svd = patch_svd_with_angles(r_patch, angles)?;
    Ok(corrected_values(r_patch, &svd, mode))
}

#[derive(Debug, Clone)]
pub struct SvdBeamformOutput {
    pub image: ComplexImage,
    /// One law per patch, in patch order.
    pub laws: Vec<ExtractedAberration>,
    pub singular_values: Vec<Vec<f64>>,
}

/// Correct every patch independently and stitch by averaging each pixel
/// over the patches that cover it.
///
/// Patches may be processed in parallel. Accumulation runs afterwards in
/// patch order and the division happens in a final pass, so the result
/// does not depend on the thread count.
pub fn svd_beamform(
    r: &UltrafastCompoundMatrix,
    patches: &PatchGrid,
    mode: CorrectionMode,
) -> Result<SvdBeamformOutput> {
    if patches
        .patches
        .iter()
        .any(|p| p.ix1 > r.grid.nx || p.iz1 > r.grid.nz || p.is_empty())
    {
        return Err(Error::Shape("patch lies outside the imaging grid".into()));
    }
    let results = par::map_range(patches.len(), |k| -> Result<_> {
        let rect = patches.patches[k];
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
        let values = corrected_values(m.view(), &svd, mode);
        Ok((values, law, svd.singular_values))
    });

    let n_pix = r.n_pixels();
    let mut sum = vec![Complex64::new(0.0, 0.0); n_pix];
    let mut count = vec![0usize; n_pix];
    let mut laws = Vec::with_capacity(patches.len());
    let mut spectra = Vec::with_capacity(patches.len());
    for (k, res) in results.into_iter().enumerate() {
        let (values, law, s) = res?;
        for (v, p) in values.iter().zip(patches.patches[k].pixel_indices(&r.grid)) {
            sum[p] += v;
            count[p] += 1;
        }
        laws.push(law);
        spectra.push(s);
    }
    let pixels = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(SvdBeamformOutput {
        image: ComplexImage::new(r.grid, pixels)?,
        laws,
        singular_values: spectra,
    })
}
