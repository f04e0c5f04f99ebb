use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::TransducerArray;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;

/// Which propagation legs a near-field screen acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScreenPaths {
    #[default]
    Both,
    TransmitOnly,
    ReceiveOnly,
}

impl ScreenPaths {
    pub fn transmit(self) -> bool {
        matches!(self, ScreenPaths::Both | ScreenPaths::TransmitOnly)
    }

    pub fn receive(self) -> bool {
        matches!(self, ScreenPaths::Both | ScreenPaths::ReceiveOnly)
    }
}

/// Thin delay/amplitude screen sitting on the array face.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementScreen {
    /// Per-element delay, s.
    pub delays: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Correlation length the delays were drawn with, m (metadata only).
    pub correlation_length: f64,
    pub paths: ScreenPaths,
}

impl ElementScreen {
    pub fn new(delays: Vec<f64>, amplitudes: Vec<f64>, correlation_length: f64) -> Result<Self> {
        if delays.len() != amplitudes.len() {
            return Err(Error::Shape("screen delays and amplitudes differ in length".into()));
        }
        if amplitudes.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config("screen amplitudes must be >= 0".into()));
        }
        Ok(Self {
            delays,
            amplitudes,
            correlation_length,
            paths: ScreenPaths::Both,
        })
    }

    pub fn with_paths(mut self, paths: ScreenPaths) -> Self {
        self.paths = paths;
        self
    }

    pub fn is_identity(&self) -> bool {
        self.delays.iter().all(|d| *d == 0.0) && self.amplitudes.iter().all(|a| *a == 1.0)
    }

    pub(crate) fn check(&self, array: &TransducerArray) -> Result<()> {
        if self.delays.len() != array.n_elements {
            return Err(Error::Shape(format!(
                "screen has {} elements, array has {}",
                self.delays.len(),
                array.n_elements
            )));
        }
        Ok(())
    }
}

/// Gaussian-process delay screen over the element positions with
/// covariance `rms^2 exp(-dx^2 / (2 l^2))`, drawn by factoring the
/// covariance through its eigendecomposition.
pub fn sample_correlated_screen(
    array: &TransducerArray,
    rms_delay: f64,
    correlation_length: f64,
    seed: u64,
) -> Result<ElementScreen> {
    if !(correlation_length > 0.0) {
        return Err(Error::Config(format!(
            "correlation length must be positive, got {correlation_length}"
        )));
    }
    if !(rms_delay >= 0.0) {
        return Err(Error::Config(format!("rms delay must be >= 0, got {rms_delay}")));
    }
    let n = array.n_elements;
    if rms_delay == 0.0 {
        return ElementScreen::new(vec![0.0; n], vec![1.0; n], correlation_length);
    }
    let delays = gaussian_process(array.element_x(), correlation_length, seed)?
        .into_iter()
        .map(|v| rms_delay * v)
        .collect();
    ElementScreen::new(delays, vec![1.0; n], correlation_length)
}

/// Unit-variance zero-mean Gaussian process on `points` with a squared
/// exponential covariance of length `correlation`.
pub(crate) fn gaussian_process(points: &[f64], correlation: f64, seed: u64) -> Result<Vec<f64>> {
    let n = points.len();
    let cov = Array2::from_shape_fn((n, n), |(i, j)| {
        let d = points[i] - points[j];
        Complex64::new((-d * d / (2.0 * correlation * correlation)).exp(), 0.0)
    });
    let eig = hermitian_eigen(cov.view())?;
    let weights: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|k| eig.vectors[[i, k]].re * weights[k] * white[k])
                .sum()
        })
        .collect())
}
