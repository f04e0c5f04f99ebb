//! Experiment configuration, stored as TOML with one level of sections.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::ImageFormat;
use crate::arraysim::{
    symmetric_angles, Cyst, Extent, PhantomSpec, Pin, PulseModel, ScreenPaths, SmoothLawSpec,
    TransducerArray,
};
use crate::beamform::ImagingGrid;
use crate::error::{Error, Result};
use crate::svdcore::{CorrectionMode, PatchGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_elements: usize,
    /// m.
    pub pitch: f64,
    /// Hz.
    pub center_frequency: f64,
    /// Hz.
    pub sampling_frequency: f64,
    /// m/s.
    pub sound_speed: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_elements: 64,
            pitch: 0.2e-3,
            center_frequency: 6.25e6,
            sampling_frequency: 25e6,
            sound_speed: 1540.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub n_cycles: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self { n_cycles: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnglesConfig {
    pub count: usize,
    /// Full span, symmetric about 0, degrees.
    pub span_deg: f64,
}

impl Default for AnglesConfig {
    fn default() -> Self {
        Self {
            count: 32,
            span_deg: 36.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nz: usize,
    /// Depth of the first row, m.
    pub z0: f64,
    /// Lateral spacing in wavelengths.
    pub dx_wavelengths: f64,
    /// Axial spacing in wavelengths.
    pub dz_wavelengths: f64,
    pub f_number: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 48,
            nz: 96,
            z0: 12e-3,
            dx_wavelengths: 1.0,
            dz_wavelengths: 0.5,
            f_number: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Scatterers per squared wavelength.
    pub speckle_density: f64,
    pub cyst_x: f64,
    pub cyst_z: f64,
    /// 0 disables the cyst.
    pub cyst_radius: f64,
    pub cyst_echogenicity: f64,
    pub pin_x: Vec<f64>,
    pub pin_z: Vec<f64>,
    pub pin_amplitude: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            x_min: -7e-3,
            x_max: 7e-3,
            z_min: 11e-3,
            z_max: 25e-3,
            speckle_density: 2.0,
            cyst_x: 0.0,
            cyst_z: 18e-3,
            cyst_radius: 2.5e-3,
            cyst_echogenicity: 0.0,
            pin_x: vec![-3e-3, 3e-3],
            pin_z: vec![14e-3, 22e-3],
            pin_amplitude: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AberrationKind {
    None,
    /// Random smooth angular law applied to the clean channel data.
    AngularRandom,
    /// Angular law read from `law_file`.
    AngularFile,
    /// Correlated element screen inside the simulation.
    Screen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AberrationConfig {
    pub kind: AberrationKind,
    /// Phase excursion of the random law, rad.
    pub peak_to_peak_rad: f64,
    pub correlation_deg: f64,
    pub tilt_free: bool,
    pub law_file: PathBuf,
    /// s.
    pub screen_rms_delay: f64,
    /// m.
    pub screen_correlation_length: f64,
    /// `both`, `transmit` or `receive`.
    pub screen_paths: String,
}

impl Default for AberrationConfig {
    fn default() -> Self {
        Self {
            kind: AberrationKind::AngularRandom,
            peak_to_peak_rad: 6.0,
            correlation_deg: 28.6,
            tilt_free: true,
            law_file: PathBuf::new(),
            screen_rms_delay: 100e-9,
            screen_correlation_length: 2e-3,
            screen_paths: "both".into(),
        }
    }
}

impl AberrationConfig {
    pub fn law_spec(&self) -> SmoothLawSpec {
        SmoothLawSpec {
            peak_to_peak: self.peak_to_peak_rad,
            correlation_angle: self.correlation_deg.to_radians(),
            tilt_free: self.tilt_free,
        }
    }

    pub fn paths(&self) -> Result<ScreenPaths> {
        match self.screen_paths.as_str() {
            "both" => Ok(ScreenPaths::Both),
            "transmit" => Ok(ScreenPaths::TransmitOnly),
            "receive" => Ok(ScreenPaths::ReceiveOnly),
            other => Err(Error::Config(format!(
                "screen_paths '{other}' is not both, transmit or receive"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchConfig {
    pub lateral_wavelengths: f64,
    pub axial_wavelengths: f64,
    pub overlap: f64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            lateral_wavelengths: 70.0,
            axial_wavelengths: 10.0,
            overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionConfig {
    /// `rank1` or `phase_conjugate`.
    pub mode: String,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            mode: "rank1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// `pgm` or `csv`.
    pub format: String,
    pub dynamic_range_db: f64,
    /// Also write channel data and compound matrices.
    pub write_raw: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            format: "pgm".into(),
            dynamic_range_db: 60.0,
            write_raw: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    /// 0 uses the global pool.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1],
            threads: 0,
        }
    }
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArrayConfig,
    pub pulse: PulseConfig,
    pub angles: AnglesConfig,
    pub grid: GridConfig,
    pub phantom: PhantomConfig,
    pub aberration: AberrationConfig,
    pub patches: PatchConfig,
    pub correction: CorrectionConfig,
    pub output: OutputConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    /// Dense acquisition: 100 angles over the same span.
    pub fn dense_angles() -> Self {
        let mut c = Self::default();
        c.angles.count = 100;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    /// Check everything that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        self.transducer()?;
        self.pulse_model()?;
        self.imaging_grid()?;
        self.correction_mode()?;
        self.image_format()?;
        self.aberration.paths()?;
        if self.angles.count == 0 {
            return Err(Error::Config("angle count must be positive".into()));
        }
        if !(self.grid.f_number > 0.0) {
            return Err(Error::Config("f_number must be positive".into()));
        }
        if self.phantom.pin_x.len() != self.phantom.pin_z.len() {
            return Err(Error::Config("pin_x and pin_z differ in length".into()));
        }
        if !(0.0..1.0).contains(&self.patches.overlap) {
            return Err(Error::Config("patch overlap must be in [0, 1)".into()));
        }
        if !(self.patches.lateral_wavelengths > 0.0) || !(self.patches.axial_wavelengths > 0.0) {
            return Err(Error::Config("patch size must be positive".into()));
        }
        if !(self.output.dynamic_range_db > 0.0) {
            return Err(Error::Config("dynamic range must be positive".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.aberration.kind == AberrationKind::AngularFile
            && self.aberration.law_file.as_os_str().is_empty()
        {
            return Err(Error::Config("aberration kind angular_file needs law_file".into()));
        }
        Ok(())
    }

    pub fn transducer(&self) -> Result<TransducerArray> {
        let a = &self.array;
        TransducerArray::new(
            a.n_elements,
            a.pitch,
            a.center_frequency,
            a.sampling_frequency,
            a.sound_speed,
        )
    }

    pub fn pulse_model(&self) -> Result<PulseModel> {
        PulseModel::new(self.array.center_frequency, self.pulse.n_cycles)
    }

    pub fn angle_set(&self) -> Vec<f64> {
        symmetric_angles(self.angles.count, self.angles.span_deg.to_radians())
    }

    pub fn imaging_grid(&self) -> Result<ImagingGrid> {
        let l = self.array.sound_speed / self.array.center_frequency;
        let g = &self.grid;
        let dx = g.dx_wavelengths * l;
        ImagingGrid::new(
            -0.5 * (g.nx as f64 - 1.0) * dx,
            g.z0,
            g.nx,
            g.nz,
            dx,
            g.dz_wavelengths * l,
        )
    }

    pub fn cyst(&self) -> Option<Cyst> {
        let p = &self.phantom;
        (p.cyst_radius > 0.0).then_some(Cyst {
            center_x: p.cyst_x,
            center_z: p.cyst_z,
            radius: p.cyst_radius,
            echogenicity: p.cyst_echogenicity,
        })
    }

    pub fn pins(&self) -> Vec<Pin> {
        let p = &self.phantom;
        p.pin_x
            .iter()
            .zip(&p.pin_z)
            .map(|(&x, &z)| Pin {
                x,
                z,
                amplitude: p.pin_amplitude,
            })
            .collect()
    }

    pub fn phantom_spec(&self, seed: u64) -> PhantomSpec {
        let p = &self.phantom;
        PhantomSpec {
            extent: Extent {
                x_min: p.x_min,
                x_max: p.x_max,
                z_min: p.z_min,
                z_max: p.z_max,
            },
            speckle_density: p.speckle_density,
            wavelength: self.array.sound_speed / self.array.center_frequency,
            pins: self.pins(),
            cysts: self.cyst().into_iter().collect(),
            seed,
        }
    }

    pub fn patch_grid(&self) -> Result<PatchGrid> {
        let l = self.array.sound_speed / self.array.center_frequency;
        PatchGrid::from_wavelengths(
            &self.imaging_grid()?,
            l,
            self.patches.lateral_wavelengths,
            self.patches.axial_wavelengths,
            self.patches.overlap,
        )
    }

    pub fn correction_mode(&self) -> Result<CorrectionMode> {
        self.correction.mode.parse()
    }

    pub fn image_format(&self) -> Result<ImageFormat> {
        self.output.format.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let angles = c.angle_set();
        assert_eq!(angles.len(), 32);
        assert!((angles[0] + 18f64.to_radians()).abs() < 1e-15);
        assert!((angles[31] - 18f64.to_radians()).abs() < 1e-15);
        let pg = c.patch_grid().unwrap();
        assert_eq!((pg.patch_nx, pg.patch_nz), (48, 20));
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.run.seeds = vec![3, 5, 8];
        c.aberration.kind = AberrationKind::Screen;
        c.phantom.pin_x = vec![1e-3];
        c.phantom.pin_z = vec![2e-2];
        let text = c.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = ExperimentConfig::from_toml("[angles]\ncount = 10\n").unwrap();
        assert_eq!(c.angles.count, 10);
        assert_eq!(c.array, ArrayConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            ExperimentConfig::from_toml("[array]\nelements = 3\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml("[correction]\nmode = \"rank2\"\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml("[array]\nsampling_frequency = 1e6\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml("[aberration]\nkind = \"angular_file\"\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn dense_angle_count() {
        assert_eq!(ExperimentConfig::dense_angles().angle_set().len(), 100);
    }
}
