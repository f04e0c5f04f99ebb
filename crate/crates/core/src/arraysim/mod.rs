//! Phantom generation and channel-data synthesis for steered plane-wave
//! transmits.
//!
//! Echoes are simulated directly as complex analytic signals (a Gaussian
//! enveloped complex exponential), under single scattering, with `1/r`
//! amplitude decay on receive and no element directivity. The transmit
//! wavefront of angle `theta` leaves the array centre `(0, 0)` at `t = 0`.

mod delay;
mod law;
mod phantom;
mod screen;
mod simulate;

pub use delay::apply_angular_delay;
pub use law::{random_smooth_law, SmoothLawSpec};
pub use phantom::{build_phantom, Cyst, Extent, PhantomSpec, Pin};
pub use screen::{sample_correlated_screen, ElementScreen, ScreenPaths};
pub use simulate::{simulate_rf, simulate_rf_window, TimeWindow};

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Linear probe geometry and sampling. Elements lie on `z = 0`, centred on
/// `x = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerArray {
    pub n_elements: usize,
    /// Element spacing, m.
    pub pitch: f64,
    /// Hz.
    pub center_frequency: f64,
    /// Hz.
    pub sampling_frequency: f64,
    /// Reference sound speed used for beamforming, m/s.
    pub sound_speed: f64,
    element_x: Vec<f64>,
}

impl TransducerArray {
    pub fn new(
        n_elements: usize,
        pitch: f64,
        center_frequency: f64,
        sampling_frequency: f64,
        sound_speed: f64,
    ) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::Config(format!(
                "array needs at least 2 elements, got {n_elements}"
            )));
        }
        if !(pitch > 0.0) || !(center_frequency > 0.0) || !(sound_speed > 0.0) {
            return Err(Error::Config(
                "pitch, center frequency and sound speed must be positive".into(),
            ));
        }
        if !(sampling_frequency >= 4.0 * center_frequency) {
            return Err(Error::Config(format!(
                "sampling frequency {sampling_frequency} Hz is below 4x the center frequency"
            )));
        }
        let half = 0.5 * (n_elements as f64 - 1.0);
        let element_x = (0..n_elements)
            .map(|i| (i as f64 - half) * pitch)
            .collect();
        Ok(Self {
            n_elements,
            pitch,
            center_frequency,
            sampling_frequency,
            sound_speed,
            element_x,
        })
    }

    /// Element lateral positions, m.
    pub fn element_x(&self) -> &[f64] {
        &self.element_x
    }

    /// Wavelength at the centre frequency for the reference sound speed.
    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.center_frequency
    }

    /// Copy of this array with a different beamforming sound speed.
    pub fn with_sound_speed(&self, c: f64) -> Result<Self> {
        Self::new(
            self.n_elements,
            self.pitch,
            self.center_frequency,
            self.sampling_frequency,
            c,
        )
    }

    /// Linear interpolation of a per-element quantity at lateral position
    /// `x`, clamped to the end elements outside the aperture.
    pub fn interpolate_elements(&self, values: &[f64], x: f64) -> f64 {
        let pos = x / self.pitch + 0.5 * (self.n_elements as f64 - 1.0);
        if pos <= 0.0 {
            return values[0];
        }
        let last = self.n_elements - 1;
        if pos >= last as f64 {
            return values[last];
        }
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        values[i] * (1.0 - f) + values[i + 1] * f
    }
}

/// Transmit pulse as a complex analytic signal
/// `g(t) = exp(-t^2 / (2 sigma^2)) exp(i 2 pi f0 t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseModel {
    pub center_frequency: f64,
    /// Full width at half maximum of the envelope, in carrier periods.
    pub n_cycles: f64,
}

/// Half-width of the evaluated pulse support, in envelope sigmas. The
/// envelope there is below 1e-15 of its peak.
pub const PULSE_SUPPORT_SIGMAS: f64 = 8.5;

impl PulseModel {
    pub fn new(center_frequency: f64, n_cycles: f64) -> Result<Self> {
        if !(center_frequency > 0.0) || !(n_cycles > 0.0) {
            return Err(Error::Config(
                "pulse frequency and cycle count must be positive".into(),
            ));
        }
        Ok(Self {
            center_frequency,
            n_cycles,
        })
    }

    /// Envelope standard deviation, s.
    pub fn sigma(&self) -> f64 {
        self.n_cycles / (2.355 * self.center_frequency)
    }

    /// Half-width of the support outside which the pulse is treated as 0.
    pub fn support(&self) -> f64 {
        PULSE_SUPPORT_SIGMAS * self.sigma()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let s = self.sigma();
        let env = (-t * t / (2.0 * s * s)).exp();
        Complex64::from_polar(env, 2.0 * PI * self.center_frequency * t)
    }
}

/// Point scatterers with real reflectivities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScattererField {
    /// (x, z) in m, z > 0.
    pub positions: Vec<(f64, f64)>,
    pub reflectivities: Vec<f64>,
}

impl ScattererField {
    pub fn new(positions: Vec<(f64, f64)>, reflectivities: Vec<f64>) -> Result<Self> {
        if positions.len() != reflectivities.len() {
            return Err(Error::Shape(format!(
                "{} positions but {} reflectivities",
                positions.len(),
                reflectivities.len()
            )));
        }
        if let Some(i) = positions.iter().position(|&(_, z)| !(z > 0.0)) {
            return Err(Error::Config(format!("scatterer {i} has z <= 0")));
        }
        Ok(Self {
            positions,
            reflectivities,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Concatenation of two fields.
    pub fn union(&self, other: &ScattererField) -> ScattererField {
        let mut out = self.clone();
        out.positions.extend_from_slice(&other.positions);
        out.reflectivities.extend_from_slice(&other.reflectivities);
        out
    }

    pub fn max_depth(&self) -> f64 {
        self.positions.iter().fold(0.0, |m, &(_, z)| m.max(z))
    }
}

/// Per-angle delay and amplitude law applied to whole transmit events.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularAberration {
    pub angles: Vec<f64>,
    /// s.
    pub delays: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl AngularAberration {
    pub fn new(angles: Vec<f64>, delays: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        if delays.len() != angles.len() || amplitudes.len() != angles.len() {
            return Err(Error::Shape(
                "aberration law lengths differ from its angle set".into(),
            ));
        }
        if amplitudes.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Config("aberration amplitudes must be >= 0".into()));
        }
        Ok(Self {
            angles,
            delays,
            amplitudes,
        })
    }

    /// Delay-only law with unit amplitudes.
    pub fn from_delays(angles: Vec<f64>, delays: Vec<f64>) -> Result<Self> {
        let n = angles.len();
        Self::new(angles, delays, vec![1.0; n])
    }

    pub fn identity(angles: &[f64]) -> Self {
        Self {
            angles: angles.to_vec(),
            delays: vec![0.0; angles.len()],
            amplitudes: vec![1.0; angles.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Narrowband phase `2 pi f0 tau` of each delay.
    pub fn phases(&self, f0: f64) -> Vec<f64> {
        self.delays.iter().map(|d| 2.0 * PI * f0 * d).collect()
    }

    pub(crate) fn check_angles(&self, angles: &[f64]) -> Result<()> {
        if self.angles.len() != angles.len()
            || self
                .angles
                .iter()
                .zip(angles)
                .any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::Shape(format!(
                "law has {} angles, data has {}",
                self.angles.len(),
                angles.len()
            )));
        }
        Ok(())
    }
}

/// Complex analytic channel data, indexed `[angle][element][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RFDataSet {
    data: Vec<Complex64>,
    pub n_samples: usize,
    /// Time of the first sample, s.
    pub t0: f64,
    pub sampling_frequency: f64,
    pub angles: Vec<f64>,
    pub array: TransducerArray,
}

impl RFDataSet {
    pub fn new(
        array: TransducerArray,
        angles: Vec<f64>,
        t0: f64,
        sampling_frequency: f64,
        n_samples: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != angles.len() * array.n_elements * n_samples {
            return Err(Error::Shape(format!(
                "{} samples do not fill {} angles x {} elements x {} samples",
                data.len(),
                angles.len(),
                array.n_elements,
                n_samples
            )));
        }
        Ok(Self {
            data,
            n_samples,
            t0,
            sampling_frequency,
            angles,
            array,
        })
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_elements(&self) -> usize {
        self.array.n_elements
    }

    pub fn trace(&self, angle: usize, element: usize) -> &[Complex64] {
        let start = (angle * self.array.n_elements + element) * self.n_samples;
        &self.data[start..start + self.n_samples]
    }

    pub fn trace_mut(&mut self, angle: usize, element: usize) -> &mut [Complex64] {
        let start = (angle * self.array.n_elements + element) * self.n_samples;
        &mut self.data[start..start + self.n_samples]
    }

    /// All samples, time fastest, then element, then angle.
    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Same acquisition restricted to a subset of transmit angles.
    pub fn select_angles(&self, columns: &[usize]) -> Result<RFDataSet> {
        if columns.iter().any(|&c| c >= self.n_angles()) {
            return Err(Error::Shape("angle index out of range".into()));
        }
        let block = self.array.n_elements * self.n_samples;
        let mut data = Vec::with_capacity(columns.len() * block);
        for &c in columns {
            data.extend_from_slice(&self.data[c * block..(c + 1) * block]);
        }
        RFDataSet::new(
            self.array.clone(),
            columns.iter().map(|&c| self.angles[c]).collect(),
            self.t0,
            self.sampling_frequency,
            self.n_samples,
            data,
        )
    }

    /// Sample-wise sum with another data set on the same acquisition.
    pub fn add(&self, other: &RFDataSet) -> Result<RFDataSet> {
        if self.data.len() != other.data.len() || self.t0 != other.t0 {
            return Err(Error::Shape("data sets have different windows".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }
}

/// `n` steering angles evenly spread over `[-span/2, span/2]` (radians).
pub fn symmetric_angles(n: usize, span: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -0.5 * span + span * i as f64 / (n - 1) as f64)
        .collect()
}
