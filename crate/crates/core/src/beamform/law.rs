use num_complex::Complex64;
use std::f64::consts::PI;

use super::UltrafastCompoundMatrix;
use crate::arraysim::AngularAberration;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawDirection {
    /// Column `theta` times `amplitude * exp(-i 2 pi f0 delay)`, i.e. `R A`.
    Forward,
    /// Column `theta` times `exp(+i 2 pi f0 delay)`; phase-only undo.
    Conjugate,
}

/// Post-multiply `R` by the diagonal law matrix (or its phase conjugate).
pub fn apply_angular_law(
    r: &UltrafastCompoundMatrix,
    law: &AngularAberration,
    direction: LawDirection,
) -> Result<UltrafastCompoundMatrix> {
    law.check_angles(&r.angles)?;
    let f0 = r.center_frequency;
    let mut out = r.clone();
    for (a, mut col) in out.data.columns_mut().into_iter().enumerate() {
        let phase = 2.0 * PI * f0 * law.delays[a];
        let factor = match direction {
            LawDirection::Forward => Complex64::from_polar(law.amplitudes[a], -phase),
            LawDirection::Conjugate => Complex64::from_polar(1.0, phase),
        };
        col.mapv_inplace(|z| z * factor);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::ImagingGrid;
    use crate::error::Error;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (UltrafastCompoundMatrix, AngularAberration) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = ImagingGrid::new(0.0, 1e-2, 3, 4, 1e-4, 5e-5).unwrap();
        let data = Array2::from_shape_fn((12, 5), |_| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let angles: Vec<f64> = (0..5).map(|i| -0.2 + 0.1 * i as f64).collect();
        let r = UltrafastCompoundMatrix::new(grid, angles.clone(), data, 6.25e6, 1540.0).unwrap();
        let delays = (0..5).map(|_| (rng.random::<f64>() - 0.5) * 4e-7).collect();
        let amps = (0..5).map(|_| 0.5 + rng.random::<f64>()).collect();
        (r, AngularAberration::new(angles, delays, amps).unwrap())
    }

    #[test]
    fn forward_then_conjugate_round_trip() {
        let (r, mut law) = setup(1);
        law.amplitudes = vec![1.0; 5];
        let f = apply_angular_law(&r, &law, LawDirection::Forward).unwrap();
        let back = apply_angular_law(&f, &law, LawDirection::Conjugate).unwrap();
        for (a, b) in back.data.iter().zip(r.data.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_law_is_identity() {
        let (r, _) = setup(2);
        let law = AngularAberration::identity(&r.angles);
        assert_eq!(apply_angular_law(&r, &law, LawDirection::Forward).unwrap(), r);
    }

    #[test]
    fn forward_equals_dense_product() {
        let (r, law) = setup(3);
        let mut diag = Array2::<Complex64>::zeros((5, 5));
        for a in 0..5 {
            diag[[a, a]] = Complex64::from_polar(
                law.amplitudes[a],
                -2.0 * PI * 6.25e6 * law.delays[a],
            );
        }
        let want = r.data.dot(&diag);
        let got = apply_angular_law(&r, &law, LawDirection::Forward).unwrap();
        for (a, b) in got.data.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mismatched_law() {
        let (r, _) = setup(4);
        let law = AngularAberration::identity(&[0.0]);
        assert!(matches!(
            apply_angular_law(&r, &law, LawDirection::Forward),
            Err(Error::Shape(_))
        ));
    }
}
