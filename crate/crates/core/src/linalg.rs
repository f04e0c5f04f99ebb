//! Small dense linear algebra: Hermitian eigensolver, least squares and a
//! few statistics shared by the correction and metrics code.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors as columns, in the order of `values`.
    pub vectors: Array2<Complex64>,
    /// Jacobi sweeps used.
    pub sweeps: usize,
}

/// Cyclic complex Jacobi eigensolver for a Hermitian matrix.
///
/// Only the upper triangle is read. Rotations are applied in a fixed
/// (p, q) order so the result is fully deterministic.
pub fn hermitian_eigen(a: ArrayView2<'_, Complex64>) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Shape(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("non-finite matrix entry".into()));
    }

    // Row-major working copy, Hermitian-completed from the upper triangle.
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(a[[i, i]].re, 0.0);
        for j in i + 1..n {
            m[i * n + j] = a[[i, j]];
            m[j * n + i] = a[[i, j]].conj();
        }
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }

    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let mut sweeps = 0;
    if n > 1 && total > 0.0 {
        let tol = (f64::EPSILON * f64::EPSILON) * total;
        loop {
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| 2.0 * m[i * n + j].norm_sqr())
                .sum();
            if off <= tol || sweeps >= MAX_SWEEPS {
                break;
            }
            sweeps += 1;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]).then(x.cmp(&y)));

    let values = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, col]] = v[row * n + k];
        }
    }
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

/// One Jacobi rotation annihilating `m[p, q]`.
fn rotate(m: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[p * n + p].re;
    let aqq = m[q * n + q].re;
    let e = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let se = e * s;
    let sec = se.conj();

    // M <- M J
    for k in 0..n {
        let mkp = m[k * n + p];
        let mkq = m[k * n + q];
        m[k * n + p] = mkp * c - mkq * sec;
        m[k * n + q] = mkp * se + mkq * c;
    }
    // M <- J^H M
    for k in 0..n {
        let mpk = m[p * n + k];
        let mqk = m[q * n + k];
        m[p * n + k] = mpk * c - mqk * se;
        m[q * n + k] = mpk * sec + mqk * c;
    }
    m[p * n + q] = Complex64::new(0.0, 0.0);
    m[q * n + p] = Complex64::new(0.0, 0.0);
    m[p * n + p] = Complex64::new(m[p * n + p].re, 0.0);
    m[q * n + q] = Complex64::new(m[q * n + q].re, 0.0);
    // V <- V J
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * c - vkq * sec;
        v[k * n + q] = vkp * se + vkq * c;
    }
}

/// Solve the dense real system `a x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major `n x n`.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Shape("solve: matrix and rhs disagree".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::Fit("singular system".into()));
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        if a[piv * n + col].abs() <= 1e-13 * scale {
            return Err(Error::Fit("rank-deficient system".into()));
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Least-squares polynomial fit `y ~ sum_k c_k x^k` of the given degree,
/// with abscissae centred and scaled internally for conditioning.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::Shape("polyfit: x and y lengths differ".into()));
    }
    let m = degree + 1;
    if x.len() < m {
        return Err(Error::Fit(format!(
            "{} points cannot determine a degree-{} fit",
            x.len(),
            degree
        )));
    }
    let scale = x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 && degree > 0 {
        return Err(Error::Fit("all abscissae are zero".into()));
    }
    let scale = if scale == 0.0 { 1.0 } else { scale };
    let mut ata = vec![0.0; m * m];
    let mut aty = vec![0.0; m];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi / scale;
        let pows: Vec<f64> = (0..m).map(|k| u.powi(k as i32)).collect();
        for r in 0..m {
            aty[r] += pows[r] * yi;
            for c in 0..m {
                ata[r * m + c] += pows[r] * pows[c];
            }
        }
    }
    let c = solve(ata, aty)?;
    Ok(c
        .iter()
        .enumerate()
        .map(|(k, ck)| ck / scale.powi(k as i32))
        .collect())
}

/// Coefficient of determination of `fitted` against `observed`.
///
/// Returns `None` when `observed` has zero variance.
pub fn r_squared(observed: &[f64], fitted: &[f64]) -> Option<f64> {
    let n = observed.len() as f64;
    if observed.is_empty() {
        return None;
    }
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|o| (o - mean).powi(2)).sum();
    if ss_tot <= f64::EPSILON * observed.iter().map(|o| o * o).sum::<f64>().max(f64::MIN_POSITIVE) {
        return None;
    }
    let ss_res: f64 = observed
        .iter()
        .zip(fitted)
        .map(|(o, f)| (o - f).powi(2))
        .sum();
    Some(1.0 - ss_res / ss_tot)
}

/// Unwrap a phase sequence so that consecutive samples differ by less
/// than pi.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let prev = phase[i - 1];
            let d = p - prev;
            offset -= TAU * ((d + PI) / TAU).floor();
        }
        out.push(p + offset);
    }
    out
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
