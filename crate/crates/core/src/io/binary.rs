//! `UFRF` channel data and `UFCM` compound matrix files.

use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::sidecar::Sidecar;
use crate::arraysim::{RFDataSet, TransducerArray};
use crate::beamform::{ImagingGrid, UltrafastCompoundMatrix};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const RF_MAGIC: &[u8; 4] = b"UFRF";
const CM_MAGIC: &[u8; 4] = b"UFCM";

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("file is truncated".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn complex(&mut self) -> Result<Complex64> {
        let re = f32::from_le_bytes(self.bytes()?);
        let im = f32::from_le_bytes(self.bytes()?);
        Ok(Complex64::new(re as f64, im as f64))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let m: [u8; 4] = self.bytes()?;
        if &m != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(magic)
            )));
        }
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {v}")));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        let mut rest = [0u8; 1];
        match self.0.read(&mut rest)? {
            0 => Ok(()),
            _ => Err(Error::Format("trailing bytes after payload".into())),
        }
    }
}

fn dim(n: usize) -> Result<[u8; 4]> {
    u32::try_from(n)
        .map(u32::to_le_bytes)
        .map_err(|_| Error::Format(format!("dimension {n} does not fit in 32 bits")))
}

fn put_complex<W: Write>(w: &mut W, z: Complex64) -> Result<()> {
    w.write_all(&(z.re as f32).to_le_bytes())?;
    w.write_all(&(z.im as f32).to_le_bytes())?;
    Ok(())
}

/// Sidecar path next to a data file: `<file>.meta`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Write channel data and its sidecar. The array geometry is always
/// recorded in the sidecar; `extra` adds pulse, phantom and screen keys.
pub fn write_rf(path: &Path, rf: &RFDataSet, extra: &Sidecar) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(RF_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&dim(rf.n_angles())?)?;
    w.write_all(&dim(rf.n_elements())?)?;
    w.write_all(&dim(rf.n_samples)?)?;
    w.write_all(&rf.t0.to_le_bytes())?;
    w.write_all(&rf.sampling_frequency.to_le_bytes())?;
    for a in &rf.angles {
        w.write_all(&a.to_le_bytes())?;
    }
    for &z in rf.samples() {
        put_complex(&mut w, z)?;
    }
    w.flush()?;

    let mut meta = Sidecar::for_array(&rf.array);
    meta.extend(extra);
    meta.write(&sidecar_path(path))
}

/// Read channel data; the array comes from the sidecar.
pub fn read_rf(path: &Path) -> Result<(RFDataSet, Sidecar)> {
    let meta = Sidecar::read(&sidecar_path(path))?;
    let array = meta.array()?;
    let mut r = Reader(BufReader::new(File::open(path)?));
    r.header(RF_MAGIC)?;
    let n_angles = r.u32()? as usize;
    let n_elements = r.u32()? as usize;
    let n_samples = r.u32()? as usize;
    if n_elements != array.n_elements {
        return Err(Error::Format(format!(
            "file has {n_elements} elements, sidecar describes {}",
            array.n_elements
        )));
    }
    let t0 = r.f64()?;
    let fs = r.f64()?;
    let angles = (0..n_angles).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let total = n_angles * n_elements * n_samples;
    let data = (0..total).map(|_| r.complex()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let rf = RFDataSet::new(array, angles, t0, fs, n_samples, data)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((rf, meta))
}

pub fn write_ufcm(path: &Path, r: &UltrafastCompoundMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let g = r.grid;
    w.write_all(CM_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&dim(g.nx)?)?;
    w.write_all(&dim(g.nz)?)?;
    w.write_all(&dim(r.n_angles())?)?;
    for v in [g.x0, g.z0, g.dx, g.dz, r.center_frequency, r.sound_speed] {
        w.write_all(&v.to_le_bytes())?;
    }
    for a in &r.angles {
        w.write_all(&a.to_le_bytes())?;
    }
    for p in 0..r.n_pixels() {
        for a in 0..r.n_angles() {
            put_complex(&mut w, r.data[[p, a]])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_ufcm(path: &Path) -> Result<UltrafastCompoundMatrix> {
    let mut r = Reader(BufReader::new(File::open(path)?));
    r.header(CM_MAGIC)?;
    let nx = r.u32()? as usize;
    let nz = r.u32()? as usize;
    let n_angles = r.u32()? as usize;
    let x0 = r.f64()?;
    let z0 = r.f64()?;
    let dx = r.f64()?;
    let dz = r.f64()?;
    let f0 = r.f64()?;
    let c = r.f64()?;
    let angles = (0..n_angles).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let grid = ImagingGrid::new(x0, z0, nx, nz, dx, dz).map_err(|e| Error::Format(e.to_string()))?;
    let mut data = Array2::zeros((nx * nz, n_angles).f());
    for p in 0..nx * nz {
        for a in 0..n_angles {
            data[[p, a]] = r.complex()?;
        }
    }
    r.finish()?;
    UltrafastCompoundMatrix::new(grid, angles, data, f0, c).map_err(|e| Error::Format(e.to_string()))
}

/// Array described by the standard sidecar keys.
pub(crate) fn array_from(meta: &Sidecar) -> Result<TransducerArray> {
    TransducerArray::new(
        meta.get_parsed("n_elements")?,
        meta.get_parsed("pitch")?,
        meta.get_parsed("center_frequency")?,
        meta.get_parsed("sampling_frequency")?,
        meta.get_parsed("sound_speed")?,
    )
    .map_err(|e| Error::Format(format!("sidecar array: {e}")))
}
