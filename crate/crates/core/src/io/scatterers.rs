//! Scatterer lists as `x_m,z_m,reflectivity` CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::arraysim::ScattererField;
use crate::error::{Error, Result};

pub const SCATTERER_HEADER: &str = "x_m,z_m,reflectivity";

pub fn write_scatterers_csv(path: &Path, field: &ScattererField) -> Result<()> {
    let mut s = format!("{SCATTERER_HEADER}\n");
    for (&(x, z), b) in field.positions.iter().zip(&field.reflectivities) {
        let _ = writeln!(s, "{x:e},{z:e},{b:e}");
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_scatterers_csv(path: &Path) -> Result<ScattererField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SCATTERER_HEADER) {
        return Err(Error::Format(format!("expected header '{SCATTERER_HEADER}'")));
    }
    let mut positions = Vec::new();
    let mut refl = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))?;
        if v.len() != 3 {
            return Err(Error::Format(format!("line {} has {} fields", n + 2, v.len())));
        }
        positions.push((v[0], v[1]));
        refl.push(v[2]);
    }
    ScattererField::new(positions, refl).map_err(|e| Error::Format(e.to_string()))
}
