//! PGM and CSV export of images and matrices.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::beamform::ComplexImage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImageFormat {
    #[default]
    Pgm,
    Csv,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Csv => "csv",
        }
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" => Ok(ImageFormat::Pgm),
            "csv" => Ok(ImageFormat::Csv),
            _ => Err(Error::Config(format!("unknown image format '{s}' (pgm or csv)"))),
        }
    }
}

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

/// Magnitudes laid out row by row with `z` down and `x` across.
fn raster(image: &ComplexImage) -> (usize, usize, Vec<f64>) {
    let g = image.grid;
    let mut out = Vec::with_capacity(g.n_pixels());
    for iz in 0..g.nz {
        for ix in 0..g.nx {
            out.push(image.get(ix, iz).norm());
        }
    }
    (g.nx, g.nz, out)
}

/// Binary 8-bit PGM of `20 log10(v / max)` mapped from `[-dr, 0]` dB onto
/// `[0, 255]`.
pub fn pgm_bytes(width: usize, height: usize, values: &[f64], dynamic_range_db: f64) -> Result<Vec<u8>> {
    if !(dynamic_range_db > 0.0) {
        return Err(Error::Config(format!(
            "dynamic range must be positive, got {dynamic_range_db}"
        )));
    }
    if values.len() != width * height {
        return Err(Error::Shape("raster size does not match its dimensions".into()));
    }
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if max <= 0.0 || v <= 0.0 {
            return 0u8;
        }
        let db = 20.0 * (v / max).log10();
        (255.0 * (db + dynamic_range_db) / dynamic_range_db).round().clamp(0.0, 255.0) as u8
    }));
    Ok(out)
}

/// Comma-separated values, one raster row per line.
pub fn csv_text(width: usize, values: &[f64]) -> String {
    let mut s = String::new();
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

/// Write `|pixel|` as PGM (log-compressed) or CSV (raw magnitudes).
pub fn export_image(image: &ComplexImage, path: &Path, format: ImageFormat, dynamic_range_db: f64) -> Result<()> {
    let (w, h, values) = raster(image);
    export_raster(path, w, h, &values, format, dynamic_range_db)
}

pub fn export_raster(
    path: &Path,
    width: usize,
    height: usize,
    values: &[f64],
    format: ImageFormat,
    dynamic_range_db: f64,
) -> Result<()> {
    let bytes = match format {
        ImageFormat::Pgm => pgm_bytes(width, height, values, dynamic_range_db)?,
        ImageFormat::Csv => {
            if values.len() != width * height {
                return Err(Error::Shape("raster size does not match its dimensions".into()));
            }
            csv_text(width, values).into_bytes()
        }
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Read a CSV raster written by [`export_image`]: `(width, height, values)`.
pub fn import_csv(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut width = None;
    let mut values = Vec::new();
    let mut height = 0;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Format(format!("line {} has {} values, expected {w}", n + 1, row.len())));
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    Ok((width.unwrap_or(0), height, values))
}

/// Parse a binary PGM written by [`pgm_bytes`].
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::Format("not an 8-bit binary PGM".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM size '{s}'")));
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let data = bytes.get(pos + 1..).unwrap_or(&[]).to_vec();
    if data.len() != w * h {
        return Err(Error::Format(format!("PGM payload has {} bytes, expected {}", data.len(), w * h)));
    }
    Ok((w, h, data))
}
