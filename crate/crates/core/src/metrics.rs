//! Image-quality and law-agreement metrics: cyst contrast, pin lateral
//! resolution (intensity FWHM) and phase-law r².

use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::arraysim::{AngularAberration, Cyst};
use crate::beamform::{ComplexImage, ImagingGrid};
use crate::error::{Error, Result};
use crate::linalg;
use crate::svdcore::ExtractedAberration;

/// Reported in place of `-inf` when the inside region is exactly zero.
pub const CONTRAST_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskRole {
    Inside,
    Outside,
}

/// Set of pixel indices on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub pixels: BTreeSet<usize>,
    pub role: MaskRole,
}

impl RegionMask {
    pub fn new(pixels: BTreeSet<usize>, role: MaskRole) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::Config("region mask is empty".into()));
        }
        Ok(Self { pixels, role })
    }

    /// Pixels within `scale * radius` of the cyst centre.
    pub fn cyst_inside(grid: &ImagingGrid, cyst: &Cyst, scale: f64) -> Result<Self> {
        let r = scale * cyst.radius;
        let pixels = (0..grid.n_pixels())
            .filter(|&p| {
                let (x, z) = grid.position(p);
                (x - cyst.center_x).powi(2) + (z - cyst.center_z).powi(2) <= r * r
            })
            .collect();
        Self::new(pixels, MaskRole::Inside)
    }

    /// Annulus `[inner, outer] * radius` restricted to the cyst's depth span.
    pub fn cyst_outside(grid: &ImagingGrid, cyst: &Cyst, inner: f64, outer: f64) -> Result<Self> {
        let (r0, r1) = (inner * cyst.radius, outer * cyst.radius);
        let pixels = (0..grid.n_pixels())
            .filter(|&p| {
                let (x, z) = grid.position(p);
                let d = ((x - cyst.center_x).powi(2) + (z - cyst.center_z).powi(2)).sqrt();
                d >= r0 && d <= r1 && (z - cyst.center_z).abs() <= cyst.radius
            })
            .collect();
        Self::new(pixels, MaskRole::Outside)
    }

    /// Default mask pair: inside `0.8 r`, outside annulus `[1.2, 1.8] r`.
    pub fn cyst_default(grid: &ImagingGrid, cyst: &Cyst) -> Result<(Self, Self)> {
        Ok((
            Self::cyst_inside(grid, cyst, 0.8)?,
            Self::cyst_outside(grid, cyst, 1.2, 1.8)?,
        ))
    }

    fn mean_intensity(&self, image: &ComplexImage) -> Result<f64> {
        let n = image.pixels.len();
        if let Some(&p) = self.pixels.iter().next_back() {
            if p >= n {
                return Err(Error::Shape(format!("mask pixel {p} outside a {n}-pixel image")));
            }
        }
        Ok(self
            .pixels
            .iter()
            .map(|&p| image.pixels[p].norm_sqr())
            .sum::<f64>()
            / self.pixels.len() as f64)
    }
}

/// `10 log10(mu_in / mu_out)` with `mu` the mean of `|pixel|^2` over the
/// mask.
pub fn contrast_db(image: &ComplexImage, inside: &RegionMask, outside: &RegionMask) -> Result<f64> {
    if inside != outside && !inside.pixels.is_disjoint(&outside.pixels) {
        return Err(Error::Config("inside and outside masks overlap".into()));
    }
    let mu_i = inside.mean_intensity(image)?;
    let mu_o = outside.mean_intensity(image)?;
    if mu_o == 0.0 {
        return Err(Error::Degenerate("outside region has zero intensity".into()));
    }
    if mu_i == 0.0 {
        return Ok(CONTRAST_FLOOR_DB);
    }
    Ok((10.0 * (mu_i / mu_o).log10()).max(CONTRAST_FLOOR_DB))
}

/// Lateral intensity profile measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralWidth {
    /// Full width at half maximum, m.
    pub fwhm: f64,
    /// Half-maximum crossing distances from the refined peak, m.
    pub left: f64,
    pub right: f64,
    /// Refined peak position, m.
    pub peak_x: f64,
    pub peak_row: usize,
}

/// FWHM of `|pixel|^2` along the row through pixel `(ix, iz)`, which must
/// be the local lateral maximum. The peak is refined with a parabola and
/// the half-maximum crossings are linearly interpolated.
pub fn lateral_fwhm_at(image: &ComplexImage, ix: usize, iz: usize) -> Result<LateralWidth> {
    let g = &image.grid;
    if ix == 0 || ix + 1 >= g.nx {
        return Err(Error::Boundary(format!("peak column {ix} touches the lateral edge")));
    }
    let row: Vec<f64> = (0..g.nx).map(|k| image.get(k, iz).norm_sqr()).collect();
    let (l, c, r) = (row[ix - 1], row[ix], row[ix + 1]);
    let curv = l - 2.0 * c + r;
    let (offset, peak) = if curv < 0.0 {
        let d = 0.5 * (l - r) / curv;
        (d, c - 0.25 * (l - r) * d)
    } else {
        (0.0, c)
    };
    let half = 0.5 * peak;
    let peak_pos = ix as f64 + offset;

    let mut k = ix;
    while row[k] >= half {
        if k == 0 {
            return Err(Error::Boundary("left half-maximum crossing outside grid".into()));
        }
        k -= 1;
    }
    let left_pos = k as f64 + (half - row[k]) / (row[k + 1] - row[k]);
    let mut k = ix;
    while row[k] >= half {
        if k + 1 >= g.nx {
            return Err(Error::Boundary("right half-maximum crossing outside grid".into()));
        }
        k += 1;
    }
    let right_pos = k as f64 - (half - row[k]) / (row[k - 1] - row[k]);
    Ok(LateralWidth {
        fwhm: (right_pos - left_pos) * g.dx,
        left: (peak_pos - left_pos) * g.dx,
        right: (right_pos - peak_pos) * g.dx,
        peak_x: g.x0 + peak_pos * g.dx,
        peak_row: iz,
    })
}

/// Half-size of the peak search box around a nominal pin position, m.
pub const PIN_SEARCH_RADIUS: f64 = 0.5e-3;

/// Lateral resolution of a pin near `pin_xz`: the brightest pixel within
/// [`PIN_SEARCH_RADIUS`] (and at least two pixels laterally, four axially)
/// of the nominal position is taken as the peak.
pub fn lateral_resolution(image: &ComplexImage, pin_xz: (f64, f64)) -> Result<f64> {
    Ok(pin_width(image, pin_xz)?.fwhm)
}

pub fn pin_width(image: &ComplexImage, pin_xz: (f64, f64)) -> Result<LateralWidth> {
    let g = &image.grid;
    let (cx, cz) = g
        .nearest(pin_xz.0, pin_xz.1)
        .ok_or_else(|| Error::Boundary("pin outside the image grid".into()))?;
    let hx = ((PIN_SEARCH_RADIUS / g.dx).ceil() as usize).max(2);
    let hz = ((PIN_SEARCH_RADIUS / g.dz).ceil() as usize).max(4);
    let mut best = (cx, cz);
    let mut best_v = -1.0;
    for ix in cx.saturating_sub(hx)..(cx + hx + 1).min(g.nx) {
        for iz in cz.saturating_sub(hz)..(cz + hz + 1).min(g.nz) {
            let v = image.get(ix, iz).norm_sqr();
            if v > best_v {
                best_v = v;
                best = (ix, iz);
            }
        }
    }
    lateral_fwhm_at(image, best.0, best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    None,
    /// Remove the best constant offset.
    Offset,
    /// Remove the best offset and linear tilt in angle.
    Affine,
}

/// Outcome of a law comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawAgreement {
    R2(f64),
    /// The reference law is constant, r² is undefined.
    Undefined,
}

impl LawAgreement {
    pub fn value(self) -> Option<f64> {
        match self {
            LawAgreement::R2(v) => Some(v),
            LawAgreement::Undefined => None,
        }
    }
}

/// r² between two phase sequences (radians) on the same angles, after
/// unwrapping both and the requested alignment of `estimate` onto
/// `reference`. Entries flagged in `mask` are ignored.
pub fn phase_r2(
    angles: &[f64],
    estimate: &[f64],
    reference: &[f64],
    mask: &[bool],
    alignment: Alignment,
) -> Result<LawAgreement> {
    if estimate.len() != reference.len() || angles.len() != reference.len() {
        return Err(Error::Shape("phase laws have different lengths".into()));
    }
    let keep: Vec<usize> = (0..angles.len())
        .filter(|&i| !mask.get(i).copied().unwrap_or(false))
        .collect();
    let th: Vec<f64> = keep.iter().map(|&i| angles[i]).collect();
    let est = linalg::unwrap_phase(&keep.iter().map(|&i| estimate[i]).collect::<Vec<_>>());
    let refr = linalg::unwrap_phase(&keep.iter().map(|&i| reference[i]).collect::<Vec<_>>());
    // Bring the unwrapped estimate to the same 2 pi branch as the reference.
    let shift = {
        let d = linalg::mean(&refr) - linalg::mean(&est);
        2.0 * PI * (d / (2.0 * PI)).round()
    };
    let mut est: Vec<f64> = est.iter().map(|e| e + shift).collect();
    let residual: Vec<f64> = refr.iter().zip(&est).map(|(r, e)| r - e).collect();
    match alignment {
        Alignment::None => {}
        Alignment::Offset => {
            let m = linalg::mean(&residual);
            est.iter_mut().for_each(|e| *e += m);
        }
        Alignment::Affine => {
            let c = linalg::polyfit(&th, &residual, 1)?;
            for (e, t) in est.iter_mut().zip(&th) {
                *e += c[0] + c[1] * t;
            }
        }
    }
    Ok(match linalg::r_squared(&refr, &est) {
        Some(v) => LawAgreement::R2(v),
        None => LawAgreement::Undefined,
    })
}

/// r² of an extracted law against a known delay law, compared as phases
/// `2 pi f0 delay`.
pub fn phase_law_r2(
    estimated: &ExtractedAberration,
    truth: &AngularAberration,
    f0: f64,
    alignment: Alignment,
) -> Result<LawAgreement> {
    truth.check_angles(&estimated.angles)?;
    phase_r2(
        &estimated.angles,
        &estimated.phase,
        &truth.phases(f0),
        &estimated.masked,
        alignment,
    )
}
