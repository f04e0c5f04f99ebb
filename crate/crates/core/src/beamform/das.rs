use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64;

use super::{ImagingGrid, UltrafastCompoundMatrix};
use crate::arraysim::{AngularAberration, RFDataSet, TransducerArray};
use crate::error::{Error, Result};
use crate::linalg;
use crate::par;

/// Delay-and-sum beamforming of every transmit into its own column of `R`.
///
/// `R[p, theta] = sum_j trace_{theta, j}(tau_tx(p, theta) + tau_rx(p, j))`
/// over the elements with `|x_j - x_p| <= z_p / (2 f_number)`, rectangular
/// apodization, linear interpolation of the complex samples. Contributions
/// that need a sample outside the trace count towards
/// [`UltrafastCompoundMatrix::out_of_window`] and add nothing.
pub fn das_beamform(
    rf: &RFDataSet,
    grid: &ImagingGrid,
    f_number: f64,
) -> Result<UltrafastCompoundMatrix> {
    let zeros_tx = vec![0.0; rf.n_angles()];
    let zeros_rx = vec![0.0; rf.n_elements()];
    beamform_with(rf, grid, f_number, &zeros_tx, &zeros_rx)
}

/// Beamforming with the transmit travel time of angle `theta` advanced by
/// `law.delays[theta]`.
///
/// With `correct_receive`, element receive delays estimated from the law
/// by [`project_law_to_elements`] (referenced to the grid centre) are
/// compensated as well. That receive path is experimental.
pub fn rebeamform_corrected(
    rf: &RFDataSet,
    law: &AngularAberration,
    grid: &ImagingGrid,
    f_number: f64,
    correct_receive: bool,
) -> Result<UltrafastCompoundMatrix> {
    law.check_angles(&rf.angles)?;
    let rx = if correct_receive {
        let xc = grid.x0 + 0.5 * (grid.nx as f64 - 1.0) * grid.dx;
        let zc = grid.z0 + 0.5 * (grid.nz as f64 - 1.0) * grid.dz;
        project_law_to_elements(&rf.array, law, (xc, zc))?
    } else {
        vec![0.0; rf.n_elements()]
    };
    beamform_with(rf, grid, f_number, &law.delays, &rx)
}

/// Least-squares near-field screen whose plane-wave projections through
/// `reference` best reproduce the angular delay law.
///
/// The ray of angle `theta` reaching `reference = (x, z)` crosses the array
/// at `x - z tan(theta)`; its delay is the linear interpolation of the
/// element delays there. A small second-difference penalty keeps the
/// elements no ray touches well defined.
pub fn project_law_to_elements(
    array: &TransducerArray,
    law: &AngularAberration,
    reference: (f64, f64),
) -> Result<Vec<f64>> {
    let n = array.n_elements;
    let half = 0.5 * (n as f64 - 1.0);
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    for (&theta, &d) in law.angles.iter().zip(&law.delays) {
        let origin = reference.0 - reference.1 * theta.tan();
        let pos = (origin / array.pitch + half).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let f = pos - i as f64;
        let w = [(i, 1.0 - f), (i + 1, f)];
        for &(r, wr) in &w {
            atb[r] += wr * d;
            for &(c, wc) in &w {
                ata[r * n + c] += wr * wc;
            }
        }
    }
    let smooth = 1e-2;
    for k in 1..n - 1 {
        let idx = [k - 1, k, k + 1];
        let coef = [1.0, -2.0, 1.0];
        for a in 0..3 {
            for b in 0..3 {
                ata[idx[a] * n + idx[b]] += smooth * coef[a] * coef[b];
            }
        }
    }
    for k in 0..n {
        ata[k * n + k] += 1e-9;
    }
    linalg::solve(ata, atb)
}

fn beamform_with(
    rf: &RFDataSet,
    grid: &ImagingGrid,
    f_number: f64,
    tx_shift: &[f64],
    rx_shift: &[f64],
) -> Result<UltrafastCompoundMatrix> {
    if !(f_number > 0.0) {
        return Err(Error::Config(format!("f-number must be positive, got {f_number}")));
    }
    let array = &rf.array;
    let c = array.sound_speed;
    let fs = rf.sampling_frequency;
    let n_angles = rf.n_angles();
    let n_samples = rf.n_samples;
    let last = (n_samples - 1) as f64;
    let trig: Vec<(f64, f64)> = rf.angles.iter().map(|t| t.sin_cos()).collect();
    let ex = array.element_x();

    let per_pixel = par::map_range(grid.n_pixels(), |p| {
        let (x, z) = grid.position(p);
        let half_aperture = z / (2.0 * f_number);
        // (element, receive time) for the active aperture, in element order.
        let rx: Vec<(usize, f64)> = ex
            .iter()
            .enumerate()
            .filter(|(_, &xj)| (xj - x).abs() <= half_aperture)
            .map(|(j, &xj)| {
                let dx = x - xj;
                (j, (dx * dx + z * z).sqrt() / c + rx_shift[j])
            })
            .collect();
        let mut row = vec![Complex64::new(0.0, 0.0); n_angles];
        let mut missed = 0usize;
        for (a, &(sin, cos)) in trig.iter().enumerate() {
            let t_tx = (z * cos + x * sin) / c + tx_shift[a];
            let mut acc = Complex64::new(0.0, 0.0);
            for &(j, t_rx) in &rx {
                let s = (t_tx + t_rx - rf.t0) * fs;
                if !(s >= 0.0 && s <= last) {
                    missed += 1;
                    continue;
                }
                let i0 = s.floor() as usize;
                let trace = rf.trace(a, j);
                let v = if i0 + 1 < n_samples {
                    let f = s - i0 as f64;
                    trace[i0] * (1.0 - f) + trace[i0 + 1] * f
                } else {
                    trace[i0]
                };
                acc += v;
            }
            row[a] = acc;
        }
        (row, missed)
    });

    let mut data = Array2::zeros((grid.n_pixels(), n_angles).f());
    let mut out_of_window = 0;
    for (p, (row, missed)) in per_pixel.into_iter().enumerate() {
        for (a, v) in row.into_iter().enumerate() {
            data[[p, a]] = v;
        }
        out_of_window += missed;
    }
    let mut r = UltrafastCompoundMatrix::new(
        *grid,
        rf.angles.clone(),
        data,
        array.center_frequency,
        c,
    )?;
    r.out_of_window = out_of_window;
    Ok(r)
}
