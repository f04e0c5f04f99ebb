use ndarray::{Array2, ArrayView2, ShapeBuilder};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::f64::consts::PI;

use super::DEGENERACY_TOL;
use crate::beamform::PixelRect;
use crate::error::{Error, Result};
use crate::linalg;

/// Phase fixing applied to the singular vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauge {
    /// Angle column whose entry was made real and non-negative.
    pub angle_index: usize,
    /// Phase removed from the leading pair, radians.
    pub removed_phase: f64,
}

#[derive(Debug, Clone)]
pub struct PatchSVD {
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns `[n_pix, k]`. Columns with a zero
    /// singular value are zero.
    pub spatial_vectors: Array2<Complex64>,
    /// Right singular vectors as columns `[n_angles, n_angles]`.
    pub angular_vectors: Array2<Complex64>,
    pub gauge: Gauge,
    /// `s1 - s2 < DEGENERACY_TOL * s1`. The leading pair is then one
    /// deterministic choice within a degenerate subspace.
    pub degenerate: bool,
}

impl PatchSVD {
    pub fn s1(&self) -> f64 {
        self.singular_values[0]
    }

    /// `s1 / s2`, infinite for an exactly rank-1 patch.
    pub fn s_ratio(&self) -> f64 {
        match self.singular_values.get(1) {
            Some(&s2) if s2 > 0.0 => self.singular_values[0] / s2,
            _ => f64::INFINITY,
        }
    }

    pub fn spatial_vector(&self) -> Vec<Complex64> {
        self.spatial_vectors.column(0).to_vec()
    }

    pub fn angular_vector(&self) -> Vec<Complex64> {
        self.angular_vectors.column(0).to_vec()
    }
}

/// Conjugate-transpose product `R^H R` (`n_angles x n_angles`).
pub fn gram(r: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
    let n = r.ncols();
    let cols: Vec<Vec<Complex64>> = (0..n).map(|a| r.column(a).to_vec()).collect();
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let s: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
            g[[i, j]] = s;
            g[[j, i]] = s.conj();
        }
    }
    g
}

fn index_nearest_zero(angles: Option<&[f64]>, n: usize) -> usize {
    match angles {
        Some(a) if a.len() == n => (0..n)
            .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
            .unwrap_or(0),
        _ => n / 2,
    }
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// SVD of a `[n_pix, n_angles]` patch through the eigendecomposition of its
/// Gram matrix. The gauge angle is the column `n_angles / 2`; use
/// [`patch_svd_with_angles`] to pick the angle closest to broadside.
pub fn patch_svd(r: ArrayView2<'_, Complex64>) -> Result<PatchSVD> {
    svd_impl(r, None)
}

/// [`patch_svd`] with the gauge placed at the angle nearest zero.
pub fn patch_svd_with_angles(r: ArrayView2<'_, Complex64>, angles: &[f64]) -> Result<PatchSVD> {
    if angles.len() != r.ncols() {
        return Err(Error::Shape(format!(
            "{} angles for a patch with {} columns",
            angles.len(),
            r.ncols()
        )));
    }
    svd_impl(r, Some(angles))
}

fn svd_impl(r: ArrayView2<'_, Complex64>, angles: Option<&[f64]>) -> Result<PatchSVD> {
    let (n_pix, n) = r.dim();
    if n == 0 {
        return Err(Error::Shape("patch has no angle columns".into()));
    }
    if n_pix < n {
        return Err(Error::PatchTooSmall {
            patch: 0,
            n_pixels: n_pix,
            n_angles: n,
        });
    }
    let eig = linalg::hermitian_eigen(gram(r).view())?;

    // Singular values from |R v| rather than sqrt(eigenvalue): the Gram
    // route squares the condition number, the direct norm does not.
    let mut triplets: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = (0..n)
        .map(|i| {
            let v = eig.vectors.column(i).to_vec();
            let u: Vec<Complex64> = (0..n_pix)
                .map(|p| (0..n).map(|a| r[[p, a]] * v[a]).sum())
                .collect();
            let s = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (s, u, v)
        })
        .collect();
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));

    let s1 = triplets[0].0;
    if !(s1 > 0.0) || !s1.is_finite() {
        return Err(Error::Degenerate(format!("leading singular value is {s1}")));
    }

    let gauge_index = index_nearest_zero(angles, n);
    let mut removed = 0.0;
    for (k, (s, u, v)) in triplets.iter_mut().enumerate() {
        // Fall back to the largest entry when the gauge entry vanishes.
        let g = if v[gauge_index].norm() > 1e-14 {
            gauge_index
        } else {
            (0..n).max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm())).unwrap_or(0)
        };
        let phase = v[g].arg();
        let rot = Complex64::from_polar(1.0, -phase);
        v.iter_mut().for_each(|z| *z *= rot);
        if *s > 0.0 {
            let inv = rot / *s;
            u.iter_mut().for_each(|z| *z *= inv);
        } else {
            u.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        }
        if k == 0 {
            removed = phase;
        }
    }

    // Tie-break inside clusters of (numerically) equal singular values:
    // lexicographically larger angular vector first.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && triplets[start].0 - triplets[end].0 < DEGENERACY_TOL * s1 {
            end += 1;
        }
        triplets[start..end].sort_by(|a, b| lexicographic(&b.2, &a.2));
        start = end;
    }

    let degenerate = n > 1 && triplets[0].0 - triplets[1].0 < DEGENERACY_TOL * s1;
    let mut spatial = Array2::zeros((n_pix, n).f());
    let mut angular = Array2::zeros((n, n).f());
    for (k, (_, u, v)) in triplets.iter().enumerate() {
        for (p, z) in u.iter().enumerate() {
            spatial[[p, k]] = *z;
        }
        for (a, z) in v.iter().enumerate() {
            angular[[a, k]] = *z;
        }
    }
    Ok(PatchSVD {
        singular_values: triplets.iter().map(|t| t.0).collect(),
        spatial_vectors: spatial,
        angular_vectors: angular,
        gauge: Gauge {
            angle_index: gauge_index,
            removed_phase: removed,
        },
        degenerate,
    })
}

/// Angular law recovered from the leading right singular vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedAberration {
    pub angles: Vec<f64>,
    /// `2 pi f0 tau` per angle, unwrapped and zero at the gauge angle.
    pub phase: Vec<f64>,
    /// `|v1|`, rescaled to unit mean.
    pub amplitude: Vec<f64>,
    /// Angles whose entry of `v1` vanished; their phase is meaningless.
    pub masked: Vec<bool>,
    pub source_patch: Option<PixelRect>,
    pub s_ratio: f64,
    pub center_frequency: f64,
}

impl ExtractedAberration {
    /// Equivalent delays `phase / (2 pi f0)`, s.
    pub fn delays(&self) -> Vec<f64> {
        self.phase
            .iter()
            .map(|p| p / (2.0 * PI * self.center_frequency))
            .collect()
    }
}

/// Relative magnitude under which an angular entry is masked.
const MASK_TOL: f64 = 1e-12;

/// The leading right singular vector is `conj(a) / |a|` for `R = m a^T`;
/// with law factors `a = exp(-i 2 pi f0 tau)` its argument is the phase
/// `2 pi f0 tau` reported here.
pub fn extract_aberration(svd: &PatchSVD, angles: &[f64], f0: f64) -> Result<ExtractedAberration> {
    let v = svd.angular_vector();
    if angles.len() != v.len() {
        return Err(Error::Shape(format!(
            "{} angles for an angular vector of length {}",
            angles.len(),
            v.len()
        )));
    }
    let s_ratio = svd.s_ratio();
    if s_ratio.is_nan() {
        return Err(Error::Degenerate("s1/s2 is not a number".into()));
    }
    let vmax = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let masked: Vec<bool> = v.iter().map(|z| z.norm() <= MASK_TOL * vmax).collect();

    let kept: Vec<usize> = (0..v.len()).filter(|&i| !masked[i]).collect();
    let unwrapped = linalg::unwrap_phase(&kept.iter().map(|&i| v[i].arg()).collect::<Vec<_>>());
    let mut phase = vec![0.0; v.len()];
    for (k, &i) in kept.iter().enumerate() {
        phase[i] = unwrapped[k];
    }
    let g = svd.gauge.angle_index;
    let anchor = if masked[g] { 0.0 } else { phase[g] };
    for (i, p) in phase.iter_mut().enumerate() {
        if !masked[i] {
            *p -= anchor;
        }
    }

    let mags: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    let mean = linalg::mean(&mags);
    Ok(ExtractedAberration {
        angles: angles.to_vec(),
        phase,
        amplitude: mags.iter().map(|m| m / mean).collect(),
        masked,
        source_patch: None,
        s_ratio,
        center_frequency: f0,
    })
}
