use std::f64::consts::PI;

use super::screen::gaussian_process;
use super::AngularAberration;
use crate::error::{Error, Result};
use crate::linalg;

/// Shape of a random smooth angular law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothLawSpec {
    /// Phase excursion at the centre frequency, rad.
    pub peak_to_peak: f64,
    /// Correlation length of the law in angle, rad.
    pub correlation_angle: f64,
    /// Remove the best-fit line in angle before scaling. A linear phase
    /// only steers the transmit focus sideways.
    pub tilt_free: bool,
}

/// Smooth random delay law over `angles`: a Gaussian process in angle,
/// shifted to zero mean and scaled so its phase at `f0` spans exactly
/// `peak_to_peak` radians.
pub fn random_smooth_law(
    angles: &[f64],
    f0: f64,
    spec: SmoothLawSpec,
    seed: u64,
) -> Result<AngularAberration> {
    if angles.len() < 3 {
        return Err(Error::Config("a random law needs at least three angles".into()));
    }
    if !(spec.peak_to_peak >= 0.0) || !(spec.correlation_angle > 0.0) || !(f0 > 0.0) {
        return Err(Error::Config(
            "law peak-to-peak must be >= 0, correlation and f0 > 0".into(),
        ));
    }
    let peak_to_peak = spec.peak_to_peak;
    let mut g = gaussian_process(angles, spec.correlation_angle, seed)?;
    if spec.tilt_free {
        let c = linalg::polyfit(angles, &g, 1)?;
        for (v, t) in g.iter_mut().zip(angles) {
            *v -= c[0] + c[1] * t;
        }
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { peak_to_peak / (hi - lo) } else { 0.0 };
    let delays = g
        .iter()
        .map(|v| (v - mean) * scale / (2.0 * PI * f0))
        .collect();
    AngularAberration::from_delays(angles.to_vec(), delays)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arraysim::symmetric_angles;

    fn spec(correlation_angle: f64, tilt_free: bool) -> SmoothLawSpec {
        SmoothLawSpec {
            peak_to_peak: 3.0,
            correlation_angle,
            tilt_free,
        }
    }

    #[test]
    fn spans_requested_peak_to_peak() {
        let angles = symmetric_angles(32, 36f64.to_radians());
        let law = random_smooth_law(&angles, 6.25e6, spec(0.1, false), 4).unwrap();
        let ph = law.phases(6.25e6);
        let lo = ph.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ph.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((hi - lo - 3.0).abs() < 1e-12);
        assert!(ph.iter().sum::<f64>().abs() < 1e-12);
        assert_eq!(law, random_smooth_law(&angles, 6.25e6, spec(0.1, false), 4).unwrap());
    }

    #[test]
    fn tilt_free_law_has_no_linear_trend() {
        let angles = symmetric_angles(32, 36f64.to_radians());
        let law = random_smooth_law(&angles, 6.25e6, spec(0.3, true), 5).unwrap();
        let c = linalg::polyfit(&angles, &law.delays, 1).unwrap();
        assert!(c[1].abs() < 1e-20, "{}", c[1]);
    }

    #[test]
    fn neighbouring_angles_are_close() {
        let angles = symmetric_angles(32, 36f64.to_radians());
        let law = random_smooth_law(&angles, 6.25e6, spec(0.15, false), 9).unwrap();
        let ph = law.phases(6.25e6);
        let max_step = ph.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(max_step < 1.0, "{max_step}");
    }
}
