use super::svd::ExtractedAberration;
use crate::error::{Error, Result};
use crate::linalg;

/// Quadratic trend of an extracted phase law over angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedMismatch {
    pub offset: f64,
    /// rad/rad.
    pub linear_coeff: f64,
    /// rad/rad².
    pub quadratic_coeff: f64,
    /// Sign of `quadratic_coeff`: positive when the beamforming sound
    /// speed is above the true one, negative when it is below.
    pub curvature_sign: i8,
}

/// Least-squares fit `phase(theta) = c0 + c1 theta + c2 theta^2` over the
/// unmasked angles.
pub fn detect_speed_mismatch(law: &ExtractedAberration) -> Result<SpeedMismatch> {
    let keep: Vec<usize> = (0..law.angles.len()).filter(|&i| !law.masked[i]).collect();
    if keep.len() < 5 {
        return Err(Error::Fit(format!(
            "{} usable angles, the quadratic fit needs at least 5",
            keep.len()
        )));
    }
    let th: Vec<f64> = keep.iter().map(|&i| law.angles[i]).collect();
    let ph = linalg::unwrap_phase(&keep.iter().map(|&i| law.phase[i]).collect::<Vec<_>>());
    let c = linalg::polyfit(&th, &ph, 2)?;
    let sign = if c[2] > 0.0 {
        1
    } else if c[2] < 0.0 {
        -1
    } else {
        0
    };
    Ok(SpeedMismatch {
        offset: c[0],
        linear_coeff: c[1],
        quadratic_coeff: c[2],
        curvature_sign: sign,
    })
}
