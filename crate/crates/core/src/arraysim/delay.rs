use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::{AngularAberration, RFDataSet};
use crate::error::Result;
use crate::par;

/// Delay every trace of transmit `i` by `law.delays[i]` and scale it by
/// `law.amplitudes[i]`.
///
/// The shift is a frequency-domain phase ramp over a zero-padded trace,
/// which is exact for band-limited analytic signals. Angles with a zero
/// delay are only scaled.
pub fn apply_angular_delay(rf: &RFDataSet, law: &AngularAberration) -> Result<RFDataSet> {
    law.check_angles(&rf.angles)?;
    let n = rf.n_samples;
    let fs = rf.sampling_frequency;
    let max_shift = law.delays.iter().fold(0.0f64, |m, d| m.max(d.abs())) * fs;
    let n_fft = n + max_shift.ceil() as usize + 64;

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);

    let mut out = rf.clone();
    let n_el = rf.n_elements();
    let scale = 1.0 / n_fft as f64;
    par::for_each_chunk_mut(out.samples_mut(), n, |trace_idx, trace| {
        let a = trace_idx / n_el;
        let delay = law.delays[a];
        let amp = law.amplitudes[a];
        if delay == 0.0 {
            if amp != 1.0 {
                trace.iter_mut().for_each(|s| *s *= amp);
            }
            return;
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
        buf[..n].copy_from_slice(trace);
        fwd.process(&mut buf);
        for (k, b) in buf.iter_mut().enumerate() {
            let kk = if k <= n_fft / 2 { k as f64 } else { k as f64 - n_fft as f64 };
            let f = kk * fs / n_fft as f64;
            *b *= Complex64::from_polar(amp * scale, -2.0 * PI * f * delay);
        }
        inv.process(&mut buf);
        trace.copy_from_slice(&buf[..n]);
    });
    Ok(out)
}
