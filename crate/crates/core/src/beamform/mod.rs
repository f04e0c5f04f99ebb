//! Delay-and-sum receive beamforming of each steered transmit into the
//! ultrafast compound matrix `R` (pixels x angles), coherent compounding,
//! per-angle laws, and point-spread measurement.

mod das;
mod law;
mod psf;

pub use das::{das_beamform, rebeamform_corrected, project_law_to_elements};
pub use law::{apply_angular_law, LawDirection};
pub use psf::{measure_psf, PsfMeasurement};

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use num_complex::Complex64;

use crate::arraysim::TransducerArray;
use crate::error::{Error, Result};

/// Regular pixel grid. Pixels are numbered column-major with `z` fastest:
/// `p = ix * nz + iz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingGrid {
    pub x0: f64,
    pub z0: f64,
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
}

impl ImagingGrid {
    pub fn new(x0: f64, z0: f64, nx: usize, nz: usize, dx: f64, dz: f64) -> Result<Self> {
        if !(dx > 0.0) || !(dz > 0.0) {
            return Err(Error::Config("grid spacing must be positive".into()));
        }
        if nx == 0 || nz == 0 {
            return Err(Error::Config("grid must have at least one pixel".into()));
        }
        Ok(Self {
            x0,
            z0,
            nx,
            nz,
            dx,
            dz,
        })
    }

    /// Default spacing `(dx, dz) = (lambda, lambda / 2)`.
    pub fn default_spacing(array: &TransducerArray) -> (f64, f64) {
        let l = array.wavelength();
        (l, 0.5 * l)
    }

    /// Grid with the default spacing, centred laterally on `x = 0` and
    /// starting at depth `z0`.
    pub fn centered(array: &TransducerArray, z0: f64, nx: usize, nz: usize) -> Result<Self> {
        let (dx, dz) = Self::default_spacing(array);
        Self::new(-0.5 * (nx as f64 - 1.0) * dx, z0, nx, nz, dx, dz)
    }

    pub fn n_pixels(&self) -> usize {
        self.nx * self.nz
    }

    pub fn index(&self, ix: usize, iz: usize) -> usize {
        ix * self.nz + iz
    }

    pub fn coords(&self, p: usize) -> (usize, usize) {
        (p / self.nz, p % self.nz)
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    pub fn z(&self, iz: usize) -> f64 {
        self.z0 + iz as f64 * self.dz
    }

    /// Physical position of pixel `p`.
    pub fn position(&self, p: usize) -> (f64, f64) {
        let (ix, iz) = self.coords(p);
        (self.x(ix), self.z(iz))
    }

    /// Nearest pixel to `(x, z)`, if it lies inside the grid.
    pub fn nearest(&self, x: f64, z: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.x0) / self.dx).round();
        let fz = ((z - self.z0) / self.dz).round();
        if fx < 0.0 || fz < 0.0 || fx >= self.nx as f64 || fz >= self.nz as f64 {
            return None;
        }
        Some((fx as usize, fz as usize))
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.nz - 1)
    }
}

/// Per-angle beamformed images, one column per transmit angle.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrafastCompoundMatrix {
    pub grid: ImagingGrid,
    pub angles: Vec<f64>,
    /// `[n_pixels, n_angles]`, column-major so each angle is contiguous.
    pub data: Array2<Complex64>,
    /// Centre frequency of the data, Hz.
    pub center_frequency: f64,
    /// Beamforming sound speed, m/s.
    pub sound_speed: f64,
    /// Element contributions that fell outside the recorded traces.
    pub out_of_window: usize,
}

impl UltrafastCompoundMatrix {
    pub fn new(
        grid: ImagingGrid,
        angles: Vec<f64>,
        data: Array2<Complex64>,
        center_frequency: f64,
        sound_speed: f64,
    ) -> Result<Self> {
        if data.nrows() != grid.n_pixels() || data.ncols() != angles.len() {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, grid has {} pixels and {} angles",
                data.nrows(),
                data.ncols(),
                grid.n_pixels(),
                angles.len()
            )));
        }
        let mut fortran = Array2::zeros((data.nrows(), data.ncols()).f());
        fortran.assign(&data);
        Ok(Self {
            grid,
            angles,
            data: fortran,
            center_frequency,
            sound_speed,
            out_of_window: 0,
        })
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_pixels(&self) -> usize {
        self.data.nrows()
    }

    /// Rows of the pixels inside the rectangle `[ix0, ix1) x [iz0, iz1)`,
    /// ordered like the grid (z fastest).
    pub fn patch(&self, rect: PixelRect) -> Array2<Complex64> {
        let rows = rect.pixel_indices(&self.grid);
        let mut out = Array2::zeros((rows.len(), self.n_angles()).f());
        for a in 0..self.n_angles() {
            let col = self.data.column(a);
            for (r, &p) in rows.iter().enumerate() {
                out[[r, a]] = col[p];
            }
        }
        out
    }

    /// Same matrix restricted to a subset of angle columns.
    pub fn select_angles(&self, columns: &[usize]) -> Result<Self> {
        if columns.iter().any(|&c| c >= self.n_angles()) {
            return Err(Error::Shape("angle column out of range".into()));
        }
        let mut data = Array2::zeros((self.n_pixels(), columns.len()).f());
        for (k, &c) in columns.iter().enumerate() {
            data.column_mut(k).assign(&self.data.column(c));
        }
        Ok(Self {
            grid: self.grid,
            angles: columns.iter().map(|&c| self.angles[c]).collect(),
            data,
            center_frequency: self.center_frequency,
            sound_speed: self.sound_speed,
            out_of_window: self.out_of_window,
        })
    }

    pub fn view(&self) -> ArrayView2<'_, Complex64> {
        self.data.view()
    }

    /// Restrict to a sub-rectangle of the grid, keeping the angles.
    pub fn crop(&self, rect: PixelRect) -> Result<Self> {
        if rect.ix1 > self.grid.nx || rect.iz1 > self.grid.nz || rect.is_empty() {
            return Err(Error::Shape("crop rectangle outside grid".into()));
        }
        let grid = ImagingGrid::new(
            self.grid.x(rect.ix0),
            self.grid.z(rect.iz0),
            rect.ix1 - rect.ix0,
            rect.iz1 - rect.iz0,
            self.grid.dx,
            self.grid.dz,
        )?;
        let mut out = self.clone();
        out.data = self.patch(rect);
        out.grid = grid;
        Ok(out)
    }
}

/// Half-open rectangle of pixel indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelRect {
    pub ix0: usize,
    pub ix1: usize,
    pub iz0: usize,
    pub iz1: usize,
}

impl PixelRect {
    pub fn full(grid: &ImagingGrid) -> Self {
        Self {
            ix0: 0,
            ix1: grid.nx,
            iz0: 0,
            iz1: grid.nz,
        }
    }

    pub fn nx(&self) -> usize {
        self.ix1 - self.ix0
    }

    pub fn nz(&self) -> usize {
        self.iz1 - self.iz0
    }

    pub fn n_pixels(&self) -> usize {
        self.nx() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.ix1 <= self.ix0 || self.iz1 <= self.iz0
    }

    pub fn contains(&self, ix: usize, iz: usize) -> bool {
        ix >= self.ix0 && ix < self.ix1 && iz >= self.iz0 && iz < self.iz1
    }

    /// Grid pixel indices covered, z fastest.
    pub fn pixel_indices(&self, grid: &ImagingGrid) -> Vec<usize> {
        (self.ix0..self.ix1)
            .flat_map(|ix| (self.iz0..self.iz1).map(move |iz| grid.index(ix, iz)))
            .collect()
    }

    /// Centre in fractional pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.ix0 + self.ix1) as f64 - 0.5,
            0.5 * (self.iz0 + self.iz1) as f64 - 0.5,
        )
    }
}

/// Complex image on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    pub grid: ImagingGrid,
    pub pixels: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(grid: ImagingGrid, pixels: Vec<Complex64>) -> Result<Self> {
        if pixels.len() != grid.n_pixels() {
            return Err(Error::Shape(format!(
                "{} pixels for a grid of {}",
                pixels.len(),
                grid.n_pixels()
            )));
        }
        Ok(Self { grid, pixels })
    }

    pub fn get(&self, ix: usize, iz: usize) -> Complex64 {
        self.pixels[self.grid.index(ix, iz)]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.pixels.iter().map(|z| z.norm()).collect()
    }

    /// Root-mean-square of `|self - other| / rms(|other|)`.
    pub fn relative_rms_difference(&self, other: &ComplexImage) -> f64 {
        let num: f64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.pixels.iter().map(|b| b.norm_sqr()).sum();
        (num / den).sqrt()
    }

    /// Same grid, rescaled pixel values.
    pub fn scaled(&self, factor: f64) -> ComplexImage {
        ComplexImage {
            grid: self.grid,
            pixels: self.pixels.iter().map(|z| z * factor).collect(),
        }
    }
}

/// Coherent sum over angles: `pixels[p] = sum_theta R[p, theta]`.
pub fn compound(r: &UltrafastCompoundMatrix) -> ComplexImage {
    let mut pixels = vec![Complex64::new(0.0, 0.0); r.n_pixels()];
    for col in r.data.columns() {
        for (acc, v) in pixels.iter_mut().zip(col.iter()) {
            *acc += v;
        }
    }
    ComplexImage {
        grid: r.grid,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(nx: usize, nz: usize) -> ImagingGrid {
        ImagingGrid::new(0.0, 1e-2, nx, nz, 1e-4, 5e-5).unwrap()
    }

    fn random_r(nx: usize, nz: usize, na: usize, seed: u64) -> UltrafastCompoundMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array2::from_shape_fn((nx * nz, na), |_| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let angles = (0..na).map(|i| i as f64 * 0.01).collect();
        UltrafastCompoundMatrix::new(grid(nx, nz), angles, data, 6.25e6, 1540.0).unwrap()
    }

    #[test]
    fn default_spacing_from_probe() {
        let arr = TransducerArray::new(192, 0.2e-3, 6.25e6, 25e6, 1540.0).unwrap();
        let (dx, dz) = ImagingGrid::default_spacing(&arr);
        assert!((dx - 246.4e-6).abs() < 1e-10);
        assert!((dz - 123.2e-6).abs() < 1e-10);
    }

    #[test]
    fn pixel_order_is_z_fastest() {
        let g = grid(3, 4);
        assert_eq!(g.index(1, 2), 6);
        assert_eq!(g.coords(6), (1, 2));
        assert_eq!(g.nearest(1e-4, 1e-2 + 1e-4), Some((1, 2)));
        assert_eq!(g.nearest(-1e-3, 1e-2), None);
    }

    #[test]
    fn compound_single_angle_is_the_column() {
        let r = random_r(2, 3, 1, 1);
        let img = compound(&r);
        for p in 0..6 {
            assert_eq!(img.pixels[p], r.data[[p, 0]]);
        }
    }

    #[test]
    fn compound_cancels_opposite_columns() {
        let mut r = random_r(2, 3, 2, 2);
        let c0 = r.data.column(0).to_owned();
        r.data.column_mut(1).assign(&c0.mapv(|z| -z));
        assert!(compound(&r).pixels.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn compound_matches_row_sums() {
        let r = random_r(2, 3, 3, 3);
        let img = compound(&r);
        for p in 0..6 {
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..3 {
                s += r.data[[p, a]];
            }
            assert!((img.pixels[p] - s).norm() < 1e-15);
        }
    }

    #[test]
    fn patch_extraction_and_crop() {
        let r = random_r(4, 5, 2, 4);
        let rect = PixelRect {
            ix0: 1,
            ix1: 3,
            iz0: 2,
            iz1: 5,
        };
        let p = r.patch(rect);
        assert_eq!(p.dim(), (6, 2));
        assert_eq!(p[[0, 1]], r.data[[r.grid.index(1, 2), 1]]);
        assert_eq!(p[[5, 0]], r.data[[r.grid.index(2, 4), 0]]);
        let c = r.crop(rect).unwrap();
        assert_eq!(c.grid.nx, 2);
        assert_eq!(c.grid.nz, 3);
        assert_eq!(c.data, p);
    }
}
