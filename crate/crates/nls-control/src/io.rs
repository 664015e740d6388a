//! Binary containers for fields and trajectories, with JSON sidecars.
//!
//! Layout (all little endian):
//!
//! ```text
//! field:       "NLSF" u32:version  grid  coefficients
//! trajectory:  "NLST" u32:version  f64:t0 f64:dt u64:slices  grid  coefficients × slices
//! grid:        u32:dim  f64:period × dim  u64:resolution × dim  f64:dealias
//! coefficient: f64:re f64:im
//! ```

use crate::error::{Error, Result};
use crate::torus::{SpectralField, Torus, TorusSpec, C64};
use crate::trajectory::Trajectory;
use serde::Serialize;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const VERSION: u32 = 1;
const FIELD_MAGIC: &[u8; 4] = b"NLSF";
const TRAJ_MAGIC: &[u8; 4] = b"NLST";

fn put_grid(out: &mut impl Write, spec: &TorusSpec) -> std::io::Result<()> {
    out.write_all(&(spec.periods.len() as u32).to_le_bytes())?;
    for p in &spec.periods {
        out.write_all(&p.to_le_bytes())?;
    }
    for r in &spec.resolution {
        out.write_all(&(*r as u64).to_le_bytes())?;
    }
    out.write_all(&spec.dealias_fraction.to_le_bytes())
}

fn put_coeffs(out: &mut impl Write, c: &[C64]) -> std::io::Result<()> {
    for z in c {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::Format(format!("expected magic {:?}", std::str::from_utf8(magic).unwrap_or("?"))));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }
    fn grid(&mut self) -> Result<Arc<Torus>> {
        let d = self.u32()? as usize;
        if d == 0 || d > 3 {
            return Err(Error::Format(format!("dimension {d} out of range")));
        }
        let periods = (0..d).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        let resolution = (0..d).map(|_| Ok(self.u64()? as usize)).collect::<Result<Vec<_>>>()?;
        let dealias = self.f64()?;
        Torus::new(TorusSpec::new(periods, resolution)?.with_dealias(dealias)?)
    }
    fn coeffs(&mut self, n: usize) -> Result<Vec<C64>> {
        (0..n).map(|_| Ok(C64::new(self.f64()?, self.f64()?))).collect()
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn encode_field(f: &SpectralField) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 16 * f.coeffs().len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_grid(&mut out, f.torus().spec()).expect("vec write");
    put_coeffs(&mut out, f.coeffs()).expect("vec write");
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<SpectralField> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.header(FIELD_MAGIC)?;
    let torus = r.grid()?;
    let c = r.coeffs(torus.len())?;
    r.finish()?;
    SpectralField::from_coeffs(&torus, c)
}

pub fn encode_trajectory(tr: &Trajectory) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(TRAJ_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&tr.t0().to_le_bytes());
    out.extend_from_slice(&tr.dt().to_le_bytes());
    out.extend_from_slice(&(tr.len() as u64).to_le_bytes());
    put_grid(&mut out, tr.torus().spec()).expect("vec write");
    for s in tr.slices() {
        put_coeffs(&mut out, s.coeffs()).expect("vec write");
    }
    out
}

pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.header(TRAJ_MAGIC)?;
    let (t0, dt, n) = (r.f64()?, r.f64()?, r.u64()? as usize);
    let torus = r.grid()?;
    let slices = (0..n).map(|_| SpectralField::from_coeffs(&torus, r.coeffs(torus.len())?)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Trajectory::with_origin(t0, dt, slices)
}

/// Path of the JSON sidecar next to a binary file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn write_with_sidecar(path: &Path, bytes: &[u8], meta: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    let json = serde_json::to_string_pretty(meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn write_field(path: &Path, f: &SpectralField, meta: &impl Serialize) -> Result<()> {
    write_with_sidecar(path, &encode_field(f), meta)
}

pub fn write_trajectory(path: &Path, tr: &Trajectory, meta: &impl Serialize) -> Result<()> {
    write_with_sidecar(path, &encode_trajectory(tr), meta)
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    Ok(buf)
}

pub fn read_field(path: &Path) -> Result<SpectralField> {
    decode_field(&read_all(path)?)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    decode_trajectory(&read_all(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::random::smooth_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(seed: u64) -> SpectralField {
        let t = Torus::new(TorusSpec::new(vec![1.0, 2.0f64.sqrt()], vec![8, 16]).unwrap()).unwrap();
        smooth_field(&t, &mut ChaCha8Rng::seed_from_u64(seed), 3, 0.0, 0.0, 1.0)
    }

    #[test]
    fn field_round_trip() {
        let f = field(1);
        let g = decode_field(&encode_field(&f)).unwrap();
        assert_eq!(f.coeffs(), g.coeffs());
        assert_eq!(f.torus().spec(), g.torus().spec());
    }

    #[test]
    fn trajectory_round_trip_on_disk() {
        let tr = Trajectory::with_origin(0.25, 0.5, vec![field(1), field(2), field(3)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.nlst");
        write_trajectory(&p, &tr, &serde_json::json!({"what": "test"})).unwrap();
        let back = read_trajectory(&p).unwrap();
        assert_eq!((back.t0(), back.dt(), back.len()), (0.25, 0.5, 3));
        for j in 0..3 {
            assert_eq!(back.slice(j).coeffs(), tr.slice(j).coeffs());
        }
        assert!(sidecar_path(&p).exists());
    }

    #[test]
    fn rejects_corrupt_input() {
        let mut b = encode_field(&field(1));
        assert!(matches!(decode_trajectory(&b), Err(Error::Format(_))));
        b.pop();
        assert!(matches!(decode_field(&b), Err(Error::Format(_))));
        b.extend_from_slice(&[0, 0]);
        assert!(matches!(decode_field(&b), Err(Error::Format(_))));
    }
}
