//! Angular coherence of the compound matrix and the triangle check.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::svdcore::gram;

/// Covariance `R^H R` between angle columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrix {
    pub values: Array2<Complex64>,
    /// Entries divided by `sqrt(C_ii C_jj)`.
    pub normalized: bool,
    pub angles: Vec<f64>,
    /// Zero-energy columns; their rows and columns are zero after
    /// normalization.
    pub masked: Vec<bool>,
}

impl CoherenceMatrix {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

pub fn angular_coherence(
    r_patch: ArrayView2<'_, Complex64>,
    angles: &[f64],
    normalized: bool,
) -> Result<CoherenceMatrix> {
    if angles.len() != r_patch.ncols() {
        return Err(Error::Shape(format!(
            "{} angles for {} columns",
            angles.len(),
            r_patch.ncols()
        )));
    }
    if r_patch.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("non-finite entry in coherence input".into()));
    }
    let mut values = gram(r_patch);
    let n = angles.len();
    let masked: Vec<bool> = (0..n).map(|i| values[[i, i]].re <= 0.0).collect();
    if normalized {
        let d: Vec<f64> = (0..n).map(|i| values[[i, i]].re.sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                values[[i, j]] = if masked[i] || masked[j] {
                    Complex64::new(0.0, 0.0)
                } else if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    values[[i, j]] / (d[i] * d[j])
                };
            }
        }
    }
    Ok(CoherenceMatrix {
        values,
        normalized,
        angles: angles.to_vec(),
        masked,
    })
}

/// Mean of `|C|` along each superdiagonal, lag `0..N`. Masked angles are
/// left out of the averages; a lag with no usable pair reads 0.
pub fn coherence_factor_curve(c: &CoherenceMatrix) -> Result<Vec<f64>> {
    if !c.normalized {
        return Err(Error::Config("coherence factor needs a normalized matrix".into()));
    }
    let n = c.len();
    Ok((0..n)
        .map(|k| {
            let vals: Vec<f64> = (0..n - k)
                .filter(|&i| !c.masked[i] && !c.masked[i + k])
                .map(|i| c.values[[i, i + k]].norm())
                .collect();
            if vals.is_empty() {
                0.0
            } else {
                linalg::mean(&vals)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Value of the fitted line at lag 0.
    pub zero_lag_extrapolation: f64,
    /// Lags `1..=last_lag` entered the fit.
    pub last_lag: usize,
}

/// Straight-line fit of the coherence curve over lags `1..=L`, where `L`
/// is `N / 2` or the lag before the curve first drops below 0.1,
/// whichever is smaller.
pub fn triangle_fit(curve: &[f64]) -> Result<TriangleFit> {
    let n = curve.len();
    if n < 4 {
        return Err(Error::Fit(format!("coherence curve has {n} lags, need at least 4")));
    }
    let drop = (1..n).find(|&k| curve[k] < 0.1).unwrap_or(n);
    triangle_fit_lags(curve, (n / 2).min(drop - 1))
}

/// Straight-line fit over the fixed lag range `1..=last`, so curves can be
/// compared on the range usable for a reference curve.
pub fn triangle_fit_lags(curve: &[f64], last: usize) -> Result<TriangleFit> {
    if last < 2 || last >= curve.len() {
        return Err(Error::Fit(format!(
            "lag range 1..={last} unusable for a curve of {} lags",
            curve.len()
        )));
    }
    let x: Vec<f64> = (1..=last).map(|k| k as f64).collect();
    let y = &curve[1..=last];
    let c = linalg::polyfit(&x, y, 1)?;
    let fitted: Vec<f64> = x.iter().map(|k| c[0] + c[1] * k).collect();
    Ok(TriangleFit {
        slope: c[1],
        intercept: c[0],
        r2: linalg::r_squared(y, &fitted).unwrap_or(1.0),
        zero_lag_extrapolation: c[0],
        last_lag: last,
    })
}
