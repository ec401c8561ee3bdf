//! Binary checkpoint format, little-endian:
//! header { magic "CAVG", version u32, N_x u32, N_y u32 }, then payload.
//!
//! version 1: a spectral field, coefficients row-major over
//!            (k = -N_x..=N_x, j = 1..=N_y) as (f64 re, f64 im).
//! version 2: per-k covariance blocks for k = 1..=N_x, each an
//!            N_y x N_y complex matrix row-major.
//!
//! The reader rejects unknown versions, bad magic, oversized headers and
//! truncated or trailing payload bytes; it never panics on malformed
//! input.

use ndarray::Array2;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, Truncation};

pub const MAGIC: [u8; 4] = *b"CAVG";
pub const VERSION_FIELD: u32 = 1;
pub const VERSION_COVARIANCE: u32 = 2;

/// Truncation guard when reading untrusted files.
const MAX_DIM: u32 = 1 << 16;

#[derive(Debug, Clone)]
pub enum Checkpoint {
    Field(SpectralField),
    /// Covariance blocks for k = 1..=nx.
    Covariance {
        trunc: Truncation,
        blocks: Vec<Array2<Complex64>>,
    },
}

fn put_header(out: &mut Vec<u8>, version: u32, nx: u32, ny: u32) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&nx.to_le_bytes());
    out.extend_from_slice(&ny.to_le_bytes());
}

fn put_complex(out: &mut Vec<u8>, v: Complex64) {
    out.extend_from_slice(&v.re.to_le_bytes());
    out.extend_from_slice(&v.im.to_le_bytes());
}

pub fn encode_field(f: &SpectralField) -> Vec<u8> {
    let t = f.trunc;
    let mut out = Vec::with_capacity(16 + t.krows() * t.ny * 16);
    put_header(&mut out, VERSION_FIELD, t.nx as u32, t.ny as u32);
    for r in 0..t.krows() {
        for j in 0..t.ny {
            put_complex(&mut out, f.coeffs[[r, j]]);
        }
    }
    out
}

pub fn encode_covariance(trunc: Truncation, blocks: &[Array2<Complex64>]) -> Vec<u8> {
    assert_eq!(blocks.len(), trunc.nx);
    let mut out = Vec::with_capacity(16 + trunc.nx * trunc.ny * trunc.ny * 16);
    put_header(&mut out, VERSION_COVARIANCE, trunc.nx as u32, trunc.ny as u32);
    for b in blocks {
        assert_eq!(b.nrows(), trunc.ny);
        assert_eq!(b.ncols(), trunc.ny);
        for i in 0..trunc.ny {
            for j in 0..trunc.ny {
                put_complex(&mut out, b[[i, j]]);
            }
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "truncated: needed {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn complex(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
}

pub fn decode(buf: &[u8]) -> Result<Checkpoint> {
    let mut c = Cursor { buf, pos: 0 };
    let magic = c.take(4)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = c.u32()?;
    let nx = c.u32()?;
    let ny = c.u32()?;
    if nx == 0 && version == VERSION_COVARIANCE || ny == 0 {
        return Err(Error::Checkpoint(format!("degenerate sizes {nx} x {ny}")));
    }
    if nx > MAX_DIM || ny > MAX_DIM {
        return Err(Error::Checkpoint(format!("sizes {nx} x {ny} exceed guard")));
    }
    let trunc = Truncation::new(nx as usize, ny as usize);
    match version {
        VERSION_FIELD => {
            let need = trunc
                .krows()
                .checked_mul(trunc.ny)
                .and_then(|n| n.checked_mul(16))
                .ok_or_else(|| Error::Checkpoint("size overflow".into()))?;
            if buf.len() != 16 + need {
                return Err(Error::Checkpoint(format!(
                    "payload length {} does not match header sizes (want {})",
                    buf.len() - 16.min(buf.len()),
                    need
                )));
            }
            let mut f = SpectralField::zeros(trunc);
            for r in 0..trunc.krows() {
                for j in 0..trunc.ny {
                    f.coeffs[[r, j]] = c.complex()?;
                }
            }
            Ok(Checkpoint::Field(f))
        }
        VERSION_COVARIANCE => {
            let need = trunc
                .nx
                .checked_mul(trunc.ny * trunc.ny)
                .and_then(|n| n.checked_mul(16))
                .ok_or_else(|| Error::Checkpoint("size overflow".into()))?;
            if buf.len() != 16 + need {
                return Err(Error::Checkpoint(format!(
                    "payload length mismatch (want {need})"
                )));
            }
            let mut blocks = Vec::with_capacity(trunc.nx);
            for _ in 0..trunc.nx {
                let mut b = Array2::zeros((trunc.ny, trunc.ny));
                for i in 0..trunc.ny {
                    for j in 0..trunc.ny {
                        b[[i, j]] = c.complex()?;
                    }
                }
                blocks.push(b);
            }
            Ok(Checkpoint::Covariance { trunc, blocks })
        }
        v => Err(Error::Checkpoint(format!("unknown version {v}"))),
    }
}

pub fn write_field(path: &Path, f: &SpectralField) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode_field(f))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<SpectralField> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    match decode(&buf)? {
        Checkpoint::Field(f) => Ok(f),
        Checkpoint::Covariance { .. } => {
            Err(Error::Checkpoint("expected a field checkpoint, found covariance".into()))
        }
    }
}

pub fn write_covariance(path: &Path, trunc: Truncation, blocks: &[Array2<Complex64>]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode_covariance(trunc, blocks))?;
    Ok(())
}

pub fn read_covariance(path: &Path) -> Result<(Truncation, Vec<Array2<Complex64>>)> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    match decode(&buf)? {
        Checkpoint::Covariance { trunc, blocks } => Ok((trunc, blocks)),
        Checkpoint::Field(_) => {
            Err(Error::Checkpoint("expected a covariance checkpoint, found field".into()))
        }
    }
}
