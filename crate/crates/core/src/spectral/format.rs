//! Binary field format: 12-byte magic, u32 version, i32 N, i32 grid size, then
//! `(2N+1)^3` coefficients as little-endian `f64` pairs `(re, im)`.

use std::path::Path;

use num_complex::Complex64;

use super::field::ContrastField;
use super::lattice::Lattice;
use crate::error::{Error, Result};

const MAGIC: &[u8; 12] = b"VSCLABFIELD\0";
const VERSION: u32 = 1;

pub fn field_to_bytes(f: &ContrastField) -> Vec<u8> {
    let l = f.lattice();
    let mut out = Vec::with_capacity(24 + 16 * f.coeffs().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(l.max_degree as i32).to_le_bytes());
    out.extend_from_slice(&(l.grid_size as i32).to_le_bytes());
    for c in f.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

fn read_i32(b: &[u8]) -> i32 {
    i32::from_le_bytes(b.try_into().expect("4 bytes"))
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<ContrastField> {
    if bytes.len() < 24 {
        return Err(Error::Format("field file shorter than its header".into()));
    }
    if &bytes[..12] != MAGIC {
        return Err(Error::Format("bad magic in field file".into()));
    }
    let version = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field format version {version}")));
    }
    let n = read_i32(&bytes[16..20]);
    let g = read_i32(&bytes[20..24]);
    if n < 1 || g < 1 {
        return Err(Error::Format(format!("bad lattice header N={n}, grid={g}")));
    }
    let lattice = Lattice::new(n as usize, g as usize).map_err(|e| Error::Format(e.to_string()))?;
    let expected = 24 + 16 * lattice.n_modes();
    if bytes.len() != expected {
        return Err(Error::Format(format!("field payload has {} bytes, expected {expected}", bytes.len())));
    }
    let coeffs = bytes[24..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    ContrastField::from_coeffs(lattice, coeffs)
}

pub fn save_field(f: &ContrastField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, field_to_bytes(f))?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ContrastField> {
    field_from_bytes(&std::fs::read(path)?)
}
