use super::{compound, das_beamform, ComplexImage, ImagingGrid};
use crate::arraysim::{simulate_rf, PulseModel, ScattererField, TransducerArray};
use crate::error::{Error, Result};
use crate::metrics;

/// Compounded image of a unit point scatterer and its lateral width.
#[derive(Debug, Clone)]
pub struct PsfMeasurement {
    pub image: ComplexImage,
    /// Intensity FWHM through the peak row, m.
    pub lateral_fwhm: f64,
    /// Half-maximum distances left and right of the refined peak, m.
    pub left_half_width: f64,
    pub right_half_width: f64,
}

pub fn measure_psf(
    array: &TransducerArray,
    pulse: &PulseModel,
    point: (f64, f64),
    grid: &ImagingGrid,
    angles: &[f64],
    f_number: f64,
) -> Result<PsfMeasurement> {
    if grid.nearest(point.0, point.1).is_none() {
        return Err(Error::Config("point lies outside the imaging grid".into()));
    }
    let field = ScattererField::new(vec![point], vec![1.0])?;
    let rf = simulate_rf(array, pulse, &field, angles, None)?;
    let image = compound(&das_beamform(&rf, grid, f_number)?);
    let peak = (0..image.pixels.len())
        .max_by(|&a, &b| image.pixels[a].norm_sqr().total_cmp(&image.pixels[b].norm_sqr()))
        .unwrap_or(0);
    let (ix, iz) = grid.coords(peak);
    if ix == 0 || iz == 0 || ix + 1 >= grid.nx || iz + 1 >= grid.nz {
        return Err(Error::Boundary(format!("PSF peak at pixel ({ix}, {iz}) is on the grid edge")));
    }
    let w = metrics::lateral_fwhm_at(&image, ix, iz)?;
    Ok(PsfMeasurement {
        image,
        lateral_fwhm: w.fwhm,
        left_half_width: w.left,
        right_half_width: w.right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arraysim::symmetric_angles;

    fn array() -> TransducerArray {
        TransducerArray::new(32, 0.2e-3, 6.25e6, 25e6, 1540.0).unwrap()
    }

    fn fine_grid(arr: &TransducerArray, refine: f64) -> ImagingGrid {
        let l = arr.wavelength();
        let dx = l / refine;
        let nx = (3e-3 / dx).round() as usize | 1;
        ImagingGrid::new(-0.5 * (nx as f64 - 1.0) * dx, 9.5e-3, nx, 41, dx, l / 16.0).unwrap()
    }

    #[test]
    fn symmetric_setup_gives_symmetric_profile() {
        let arr = array();
        let pulse = PulseModel::new(6.25e6, 2.0).unwrap();
        let angles = symmetric_angles(7, 20f64.to_radians());
        let g = fine_grid(&arr, 8.0);
        let m = measure_psf(&arr, &pulse, (0.0, 10e-3), &g, &angles, 1.0).unwrap();
        let rel = (m.left_half_width - m.right_half_width).abs() / m.left_half_width;
        assert!(rel < 0.01, "left {} right {}", m.left_half_width, m.right_half_width);
    }

    #[test]
    fn fwhm_is_stable_under_grid_refinement() {
        let arr = array();
        let pulse = PulseModel::new(6.25e6, 2.0).unwrap();
        let angles = symmetric_angles(7, 20f64.to_radians());
        let a = measure_psf(&arr, &pulse, (0.0, 10e-3), &fine_grid(&arr, 4.0), &angles, 1.0)
            .unwrap();
        let b = measure_psf(&arr, &pulse, (0.0, 10e-3), &fine_grid(&arr, 8.0), &angles, 1.0)
            .unwrap();
        assert!((a.lateral_fwhm / b.lateral_fwhm - 1.0).abs() < 0.10);
    }

    #[test]
    fn wider_aperture_never_widens_the_psf() {
        let arr = array();
        let pulse = PulseModel::new(6.25e6, 2.0).unwrap();
        let angles = symmetric_angles(7, 20f64.to_radians());
        let g = fine_grid(&arr, 8.0);
        let widths: Vec<f64> = [1.0, 1.5, 2.0]
            .iter()
            .map(|&f| measure_psf(&arr, &pulse, (0.0, 10e-3), &g, &angles, f).unwrap().lateral_fwhm)
            .collect();
        assert!(widths[0] <= widths[1] && widths[1] <= widths[2], "{widths:?}");
    }

    #[test]
    fn peak_on_edge_is_rejected() {
        let arr = array();
        let pulse = PulseModel::new(6.25e6, 2.0).unwrap();
        let l = arr.wavelength();
        let g = ImagingGrid::new(0.0, 9.5e-3, 12, 41, l / 4.0, l / 16.0).unwrap();
        assert!(matches!(
            measure_psf(&arr, &pulse, (0.0, 10e-3), &g, &[0.0], 1.0),
            Err(Error::Boundary(_))
        ));
    }
}
