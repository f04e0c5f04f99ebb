use num_complex::Complex64;
use std::f64::consts::PI;

use super::{ElementScreen, PulseModel, RFDataSet, ScattererField, TransducerArray};
use crate::error::{Error, Result};
use crate::par;

/// Explicit acquisition window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    /// Time of the first sample, s.
    pub t0: f64,
    pub n_samples: usize,
}

/// Synthesize channel data with a window starting at `t = 0` and long
/// enough to hold the latest echo plus the pulse support.
pub fn simulate_rf(
    array: &TransducerArray,
    pulse: &PulseModel,
    field: &ScattererField,
    angles: &[f64],
    screen: Option<&ElementScreen>,
) -> Result<RFDataSet> {
    let geo = Geometry::new(array, field, angles, screen)?;
    let latest = geo.latest_arrival();
    let n_samples = ((latest + pulse.support()) * array.sampling_frequency).ceil() as usize + 2;
    simulate_with(geo, pulse, TimeWindow { t0: 0.0, n_samples })
}

/// As [`simulate_rf`] on a caller-chosen window. Every echo centre must
/// fall inside the window.
pub fn simulate_rf_window(
    array: &TransducerArray,
    pulse: &PulseModel,
    field: &ScattererField,
    angles: &[f64],
    screen: Option<&ElementScreen>,
    window: TimeWindow,
) -> Result<RFDataSet> {
    let geo = Geometry::new(array, field, angles, screen)?;
    simulate_with(geo, pulse, window)
}

/// Per-angle transmit and per-element receive travel times.
struct Geometry<'a> {
    array: &'a TransducerArray,
    field: &'a ScattererField,
    angles: &'a [f64],
    screen: Option<&'a ElementScreen>,
    /// `[angle][scatterer]` transmit delay, s.
    tx: Vec<Vec<f64>>,
}

impl<'a> Geometry<'a> {
    fn new(
        array: &'a TransducerArray,
        field: &'a ScattererField,
        angles: &'a [f64],
        screen: Option<&'a ElementScreen>,
    ) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::Config("at least one transmit angle is required".into()));
        }
        if let Some(s) = screen {
            s.check(array)?;
        }
        let screen = screen.filter(|s| !s.is_identity());
        let c = array.sound_speed;
        let tx = angles
            .iter()
            .map(|&theta| {
                let (sin, cos) = theta.sin_cos();
                field
                    .positions
                    .iter()
                    .map(|&(x, z)| {
                        let mut t = (z * cos + x * sin) / c;
                        if let Some(s) = screen.filter(|s| s.paths.transmit()) {
                            // Where the plane-wave ray through the scatterer leaves the array.
                            let origin = x - z * theta.tan();
                            t += array.interpolate_elements(&s.delays, origin);
                        }
                        t
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            array,
            field,
            angles,
            screen,
            tx,
        })
    }

    fn rx(&self, element: usize, k: usize) -> (f64, f64) {
        let (x, z) = self.field.positions[k];
        let dx = x - self.array.element_x()[element];
        let r = (dx * dx + z * z).sqrt();
        let mut t = r / self.array.sound_speed;
        let mut amp = 1.0 / r;
        if let Some(s) = self.screen.filter(|s| s.paths.receive()) {
            t += s.delays[element];
            amp *= s.amplitudes[element];
        }
        (t, amp)
    }

    fn latest_arrival(&self) -> f64 {
        let mut latest = 0.0f64;
        for tx in &self.tx {
            for (k, &t) in tx.iter().enumerate() {
                for j in 0..self.array.n_elements {
                    latest = latest.max(t + self.rx(j, k).0);
                }
            }
        }
        latest
    }

    /// First scatterer whose echo centre leaves `[t0, t_end]`.
    fn check_window(&self, t0: f64, t_end: f64) -> Result<()> {
        for k in 0..self.field.len() {
            for tx in &self.tx {
                for j in 0..self.array.n_elements {
                    let t = tx[k] + self.rx(j, k).0;
                    if t < t0 || t > t_end {
                        return Err(Error::Window {
                            index: k,
                            z: self.field.positions[k].1,
                            duration: t_end - t0,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn simulate_with(geo: Geometry<'_>, pulse: &PulseModel, window: TimeWindow) -> Result<RFDataSet> {
    let array = geo.array;
    let fs = array.sampling_frequency;
    let ts = 1.0 / fs;
    let n = window.n_samples;
    if n == 0 {
        return Err(Error::Config("window has no samples".into()));
    }
    geo.check_window(window.t0, window.t0 + (n - 1) as f64 * ts)?;

    let sigma = pulse.sigma();
    let two_sigma2 = 2.0 * sigma * sigma;
    let w0 = 2.0 * PI * pulse.center_frequency;
    // Pulse sampled on the integer grid: table[m + half] = g(m ts).
    let half = (pulse.support() * fs).ceil() as i64 + 1;
    let table: Vec<Complex64> = (-half..=half)
        .map(|m| {
            let t = m as f64 * ts;
            Complex64::from_polar((-t * t / two_sigma2).exp(), w0 * t)
        })
        .collect();

    let n_el = array.n_elements;
    let mut data = vec![Complex64::new(0.0, 0.0); geo.angles.len() * n_el * n];
    let field = geo.field;
    par::for_each_chunk_mut(&mut data, n, |trace_idx, trace| {
        let a = trace_idx / n_el;
        let j = trace_idx % n_el;
        let tx = &geo.tx[a];
        for (k, &beta) in field.reflectivities.iter().enumerate() {
            let (t_rx, amp) = geo.rx(j, k);
            let pos = (tx[k] + t_rx - window.t0) * fs;
            let n0 = pos.round();
            // Echo centre lies delta after sample n0.
            let delta = (pos - n0) * ts;
            let coef = Complex64::from_polar(
                beta * amp * (-delta * delta / two_sigma2).exp(),
                -w0 * delta,
            );
            let n0 = n0 as i64;
            let lo = (n0 - half).max(0);
            let hi = (n0 + half).min(n as i64 - 1);
            if lo > hi {
                continue;
            }
            let step = (ts * delta / (sigma * sigma)).exp();
            let mut ramp = ((lo - n0) as f64 * ts * delta / (sigma * sigma)).exp();
            for s in lo..=hi {
                let m = (s - n0 + half) as usize;
                trace[s as usize] += coef * (table[m] * ramp);
                ramp *= step;
            }
        }
    });

    RFDataSet::new(
        array.clone(),
        geo.angles.to_vec(),
        window.t0,
        fs,
        n,
        data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arraysim::ScreenPaths;

    fn array(n: usize) -> TransducerArray {
        TransducerArray::new(n, 0.2e-3, 6.25e6, 25e6, 1540.0).unwrap()
    }

    fn pulse() -> PulseModel {
        PulseModel::new(6.25e6, 2.0).unwrap()
    }

    fn argmax(trace: &[Complex64]) -> usize {
        trace
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0
    }

    #[test]
    fn single_scatterer_arrival_times() {
        let arr = array(16);
        let field = ScattererField::new(vec![(0.0, 20e-3)], vec![1.0]).unwrap();
        let rf = simulate_rf(&arr, &pulse(), &field, &[0.0], None).unwrap();
        for j in 0..16 {
            let dx = arr.element_x()[j];
            let t = (20e-3 + (dx * dx + 4e-4).sqrt()) / 1540.0;
            let expect = (t * 25e6).round() as usize;
            let got = argmax(rf.trace(0, j));
            assert!((got as i64 - expect as i64).abs() <= 1, "element {j}: {got} vs {expect}");
        }
    }

    #[test]
    fn identity_screen_is_bit_identical() {
        let arr = array(8);
        let field = ScattererField::new(
            vec![(1e-3, 12e-3), (-2e-3, 15e-3)],
            vec![0.7, -1.3],
        )
        .unwrap();
        let angles = [-0.1, 0.0, 0.2];
        let screen = ElementScreen::new(vec![0.0; 8], vec![1.0; 8], 2e-3).unwrap();
        let a = simulate_rf(&arr, &pulse(), &field, &angles, None).unwrap();
        let b = simulate_rf(&arr, &pulse(), &field, &angles, Some(&screen)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn window_error_names_scatterer() {
        let arr = array(4);
        let field = ScattererField::new(vec![(0.0, 5e-3), (0.0, 40e-3)], vec![1.0, 1.0]).unwrap();
        let err = simulate_rf_window(
            &arr,
            &pulse(),
            &field,
            &[0.0],
            None,
            TimeWindow {
                t0: 0.0,
                n_samples: 500,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Window { index: 1, .. }));
    }

    #[test]
    fn screen_mismatch_is_shape_error() {
        let arr = array(4);
        let field = ScattererField::new(vec![(0.0, 5e-3)], vec![1.0]).unwrap();
        let screen = ElementScreen::new(vec![1e-8; 3], vec![1.0; 3], 1e-3).unwrap();
        assert!(matches!(
            simulate_rf(&arr, &pulse(), &field, &[0.0], Some(&screen)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn receive_and_transmit_screens_differ_by_the_screen() {
        let arr = array(16);
        let field = ScattererField::new(vec![(0.0, 15e-3)], vec![1.0]).unwrap();
        // Ten samples of spread so the pattern is well above the timing resolution.
        let delays: Vec<f64> = (0..16).map(|j| (j as f64 * 0.7).sin() * 10.0 / 25e6).collect();
        let screen = ElementScreen::new(delays.clone(), vec![1.0; 16], 2e-3).unwrap();
        let rx = simulate_rf(
            &arr,
            &pulse(),
            &field,
            &[0.0],
            Some(&screen.clone().with_paths(ScreenPaths::ReceiveOnly)),
        )
        .unwrap();
        let tx = simulate_rf(
            &arr,
            &pulse(),
            &field,
            &[0.0],
            Some(&screen.with_paths(ScreenPaths::TransmitOnly)),
        )
        .unwrap();
        let diffs: Vec<f64> = (0..16)
            .map(|j| {
                let d = argmax(rx.trace(0, j)) as f64 - argmax(tx.trace(0, j)) as f64;
                d - delays[j] * 25e6
            })
            .collect();
        let m = diffs.iter().sum::<f64>() / 16.0;
        for d in diffs {
            assert!((d - m).abs() <= 1.0);
        }
    }
}
