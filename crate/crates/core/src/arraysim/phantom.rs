use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ScattererField;
use crate::error::{Error, Result};

/// Rectangular region, m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Extent {
    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.z_max - self.z_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pin {
    pub x: f64,
    pub z: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cyst {
    pub center_x: f64,
    pub center_z: f64,
    pub radius: f64,
    /// Multiplies speckle reflectivity inside the disk; 0 is anechoic.
    pub echogenicity: f64,
}

impl Cyst {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        (x - self.center_x).powi(2) + (z - self.center_z).powi(2) <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub extent: Extent,
    /// Speckle scatterers per squared wavelength.
    pub speckle_density: f64,
    /// Wavelength that scales `speckle_density`, m.
    pub wavelength: f64,
    pub pins: Vec<Pin>,
    pub cysts: Vec<Cyst>,
    pub seed: u64,
}

impl PhantomSpec {
    /// Number of speckle scatterers the density implies.
    pub fn speckle_count(&self) -> usize {
        (self.speckle_density * self.extent.area() / (self.wavelength * self.wavelength)).round()
            as usize
    }
}

/// Uniform speckle with standard-normal reflectivities, attenuated inside
/// cysts, followed by the pins. Scatterers whose reflectivity ends up
/// exactly zero (anechoic cysts) are dropped.
pub fn build_phantom(spec: &PhantomSpec) -> Result<ScattererField> {
    let e = spec.extent;
    if !(e.x_max > e.x_min) || !(e.z_max > e.z_min) {
        return Err(Error::Config("phantom extent is empty".into()));
    }
    if !(e.z_min > 0.0) {
        return Err(Error::Config("phantom extent must lie at z > 0".into()));
    }
    if spec.speckle_density < 0.0 || !(spec.wavelength > 0.0) {
        return Err(Error::Config(
            "speckle density must be >= 0 and wavelength > 0".into(),
        ));
    }
    if let Some(c) = spec.cysts.iter().find(|c| c.radius < 0.0) {
        return Err(Error::Config(format!("cyst radius {} is negative", c.radius)));
    }
    if spec.cysts.iter().any(|c| c.echogenicity < 0.0) {
        return Err(Error::Config("cyst echogenicity must be >= 0".into()));
    }
    if let Some(p) = spec.pins.iter().find(|p| !(p.z > 0.0)) {
        return Err(Error::Config(format!("pin at z = {} is not below the array", p.z)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = spec.speckle_count();
    let mut positions = Vec::with_capacity(count + spec.pins.len());
    let mut reflectivities = Vec::with_capacity(count + spec.pins.len());
    for _ in 0..count {
        let x = e.x_min + (e.x_max - e.x_min) * rng.random::<f64>();
        let z = e.z_min + (e.z_max - e.z_min) * rng.random::<f64>();
        let mut beta: f64 = rng.sample(StandardNormal);
        for c in spec.cysts.iter().filter(|c| c.contains(x, z)) {
            beta *= c.echogenicity;
        }
        if beta != 0.0 {
            positions.push((x, z));
            reflectivities.push(beta);
        }
    }
    for p in &spec.pins {
        positions.push((p.x, p.z));
        reflectivities.push(p.amplitude);
    }
    ScattererField::new(positions, reflectivities)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PhantomSpec {
        PhantomSpec {
            extent: Extent {
                x_min: -5e-3,
                x_max: 5e-3,
                z_min: 10e-3,
                z_max: 20e-3,
            },
            speckle_density: 2.0,
            wavelength: 0.2464e-3,
            pins: vec![],
            cysts: vec![Cyst {
                center_x: 0.0,
                center_z: 15e-3,
                radius: 2e-3,
                echogenicity: 0.0,
            }],
            seed: 11,
        }
    }

    #[test]
    fn anechoic_cyst_is_empty() {
        let s = spec();
        let f = build_phantom(&s).unwrap();
        let c = s.cysts[0];
        for (&(x, z), &b) in f.positions.iter().zip(&f.reflectivities) {
            assert!(!(c.contains(x, z) && b != 0.0));
        }
        assert!(f.len() >= 640);
    }

    #[test]
    fn zero_density_with_one_pin() {
        let mut s = spec();
        s.speckle_density = 0.0;
        s.pins = vec![Pin {
            x: 0.0,
            z: 20e-3,
            amplitude: 1.0,
        }];
        let f = build_phantom(&s).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.positions[0], (0.0, 20e-3));
        assert_eq!(f.reflectivities[0], 1.0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let a = build_phantom(&spec()).unwrap();
        let b = build_phantom(&spec()).unwrap();
        assert_eq!(a, b);
        let mut s = spec();
        s.seed = 12;
        assert_ne!(build_phantom(&s).unwrap(), a);
    }

    #[test]
    fn hyperechoic_cyst_scales_reflectivity() {
        let mut s = spec();
        s.cysts[0].echogenicity = 3.0;
        let bright = build_phantom(&s).unwrap();
        s.cysts[0].echogenicity = 1.0;
        let plain = build_phantom(&s).unwrap();
        assert_eq!(bright.len(), plain.len());
        for ((p, b0), b1) in plain.positions.iter().zip(&plain.reflectivities).zip(&bright.reflectivities) {
            let want = if s.cysts[0].contains(p.0, p.1) { 3.0 * b0 } else { *b0 };
            assert_eq!(*b1, want);
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec();
        s.extent.x_max = s.extent.x_min;
        assert!(matches!(build_phantom(&s), Err(Error::Config(_))));
        let mut s = spec();
        s.cysts[0].radius = -1e-3;
        assert!(matches!(build_phantom(&s), Err(Error::Config(_))));
    }
}
