//! CSV files for angular laws and curves.

use std::fmt::Write as _;
use std::path::Path;

use crate::arraysim::AngularAberration;
use crate::error::{Error, Result};
use crate::svdcore::ExtractedAberration;

pub const LAW_HEADER: &str = "angle_deg,phase_rad,amplitude,delay_s";

fn law_rows(law: &ExtractedAberration) -> Vec<String> {
    let delays = law.delays();
    (0..law.angles.len())
        .map(|i| {
            format!(
                "{:e},{:e},{:e},{:e}",
                law.angles[i].to_degrees(),
                law.phase[i],
                law.amplitude[i],
                delays[i]
            )
        })
        .collect()
}

pub fn law_csv(law: &ExtractedAberration) -> String {
    let mut s = format!("{LAW_HEADER}\n");
    for row in law_rows(law) {
        let _ = writeln!(s, "{row}");
    }
    s
}

pub fn write_law_csv(path: &Path, law: &ExtractedAberration) -> Result<()> {
    std::fs::write(path, law_csv(law))?;
    Ok(())
}

/// Known delay law in the same layout (phase `2 pi f0 delay`).
pub fn write_aberration_csv(path: &Path, law: &AngularAberration, f0: f64) -> Result<()> {
    let phases = law.phases(f0);
    let mut s = format!("{LAW_HEADER}\n");
    for i in 0..law.len() {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e}",
            law.angles[i].to_degrees(),
            phases[i],
            law.amplitudes[i],
            law.delays[i]
        );
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// All patch laws, each row prefixed with its patch index and rectangle.
pub fn write_patch_laws_csv(path: &Path, laws: &[ExtractedAberration]) -> Result<()> {
    let mut s = format!("patch,ix0,ix1,iz0,iz1,s_ratio,{LAW_HEADER}\n");
    for (k, law) in laws.iter().enumerate() {
        let (a, b, c, d) = law
            .source_patch
            .map(|r| (r.ix0, r.ix1, r.iz0, r.iz1))
            .unwrap_or_default();
        for row in law_rows(law) {
            let _ = writeln!(s, "{k},{a},{b},{c},{d},{:e},{row}", law.s_ratio);
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Read a law CSV (`angle_deg, phase_rad, amplitude, delay_s`) as a delay
/// law. The delay column is authoritative; the phase column is ignored.
pub fn read_law_csv(path: &Path) -> Result<AngularAberration> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Format("empty law file".into()))?;
    if header.trim() != LAW_HEADER {
        return Err(Error::Format(format!("law header '{header}' is not '{LAW_HEADER}'")));
    }
    let (mut angles, mut amps, mut delays) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let v = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("law row {}: {e}", n + 1)))?;
        if v.len() != 4 {
            return Err(Error::Format(format!("law row {} has {} columns", n + 1, v.len())));
        }
        angles.push(v[0].to_radians());
        amps.push(v[2]);
        delays.push(v[3]);
    }
    AngularAberration::new(angles, delays, amps).map_err(|e| Error::Format(e.to_string()))
}

/// Two-column CSV with a header.
pub fn write_xy_csv(path: &Path, header: (&str, &str), rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut s = format!("{},{}\n", header.0, header.1);
    for (x, y) in rows {
        let _ = writeln!(s, "{x:e},{y:e}");
    }
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extracted() -> ExtractedAberration {
        ExtractedAberration {
            angles: vec![-0.1, 0.0, 0.1],
            phase: vec![0.5, 0.0, -0.25],
            amplitude: vec![0.9, 1.0, 1.1],
            masked: vec![false; 3],
            source_patch: None,
            s_ratio: 3.0,
            center_frequency: 5e6,
        }
    }

    #[test]
    fn header_and_delay_column() {
        let text = law_csv(&extracted());
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), LAW_HEADER);
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert!((first[0] + 0.1f64.to_degrees()).abs() < 1e-12);
        assert!((first[3] - 0.5 / (2.0 * std::f64::consts::PI * 5e6)).abs() < 1e-20);
    }

    #[test]
    fn extracted_law_reads_back_as_delays() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("law.csv");
        let law = extracted();
        write_law_csv(&p, &law).unwrap();
        let back = read_law_csv(&p).unwrap();
        for (a, b) in back.delays.iter().zip(law.delays()) {
            assert_eq!(*a, b);
        }
        for (a, b) in back.angles.iter().zip(&law.angles) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn known_law_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("truth.csv");
        let law = AngularAberration::new(vec![-0.2, 0.3], vec![1e-8, -3e-8], vec![1.0, 0.5]).unwrap();
        write_aberration_csv(&p, &law, 6.25e6).unwrap();
        let back = read_law_csv(&p).unwrap();
        assert_eq!(back.delays, law.delays);
        assert_eq!(back.amplitudes, law.amplitudes);
    }

    #[test]
    fn wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_law_csv(&p), Err(Error::Format(_))));
    }
}
