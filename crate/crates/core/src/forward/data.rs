//! Scattering data matrices with their quadrature weights.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataKind {
    /// `w_f(x, y)` for sources `y` and receivers `x` on the sphere of radius `radius`
    NearField { radius: f64 },
    /// `u_inf(x_hat, d)` for incident directions `d` and observation directions `x_hat`
    FarField,
}

/// Data matrix: row = source / incident direction, column = receiver / observation direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterData {
    pub kind: DataKind,
    pub kappa: f64,
    pub sources: Vec<[f64; 3]>,
    pub source_weights: Vec<f64>,
    pub receivers: Vec<[f64; 3]>,
    pub receiver_weights: Vec<f64>,
    /// row-major, `rows() x cols()`
    #[serde(skip)]
    pub values: Vec<Complex64>,
}

impl ScatterData {
    pub fn rows(&self) -> usize {
        self.sources.len()
    }

    pub fn cols(&self) -> usize {
        self.receivers.len()
    }

    pub fn get(&self, s: usize, r: usize) -> Complex64 {
        self.values[s * self.cols() + r]
    }

    /// Checks dimensions and weight normalization.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.rows() * self.cols() {
            return Err(Error::DimensionMismatch { expected: self.rows() * self.cols(), got: self.values.len() });
        }
        if self.source_weights.len() != self.rows() || self.receiver_weights.len() != self.cols() {
            return invalid("weight vectors do not match the point sets");
        }
        let area = match self.kind {
            DataKind::NearField { radius } => 4.0 * std::f64::consts::PI * radius * radius,
            DataKind::FarField => 4.0 * std::f64::consts::PI,
        };
        for w in [&self.source_weights, &self.receiver_weights] {
            if w.iter().any(|v| !(*v > 0.0)) {
                return invalid("quadrature weights must be positive");
            }
            let total: f64 = w.iter().sum();
            if (total - area).abs() > 1e-10 * area {
                return invalid(format!("quadrature weights sum to {total}, expected {area}"));
            }
        }
        Ok(())
    }

    /// Product weight `w_s w_r` for each entry.
    pub fn entry_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        for ws in &self.source_weights {
            for wr in &self.receiver_weights {
                out.push(ws * wr);
            }
        }
        out
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), got: values.len() });
        }
        Ok(ScatterData { values, ..self.clone() })
    }

    fn check_compatible(&self, other: &ScatterData) -> Result<()> {
        if self.kind != other.kind
            || self.sources != other.sources
            || self.receivers != other.receivers
            || self.kappa != other.kappa
        {
            return invalid("data sets use different measurement configurations");
        }
        Ok(())
    }

    /// `self - other` on a common configuration.
    pub fn sub(&self, other: &ScatterData) -> Result<ScatterData> {
        self.check_compatible(other)?;
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &ScatterData) -> Result<ScatterData> {
        self.check_compatible(other)?;
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, c: Complex64) -> ScatterData {
        ScatterData { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Weighted inner product `sum w_s w_r a conj(b)`.
    pub fn inner(&self, other: &ScatterData) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self.entry_weights().iter().zip(self.values.iter().zip(&other.values)).map(|(w, (a, b))| a * b.conj() * *w).sum())
    }
}

/// Quadrature approximation of the `L^2` norm over the product of the two point sets.
pub fn data_norm(d: &ScatterData) -> f64 {
    d.entry_weights().iter().zip(&d.values).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt()
}

/// `data_norm(a - b)`
pub fn data_distance(a: &ScatterData, b: &ScatterData) -> Result<f64> {
    Ok(data_norm(&a.sub(b)?))
}

const MAGIC: &[u8; 12] = b"VSCLABDATA\0\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(flatten)]
    data: ScatterData,
    rows: usize,
    cols: usize,
    measure: String,
    payload: String,
}

/// Magic, version, `u64` header length, JSON header, then little-endian `(re, im)` pairs.
pub fn data_to_bytes(d: &ScatterData) -> Result<Vec<u8>> {
    let header = Header {
        data: d.clone(),
        rows: d.rows(),
        cols: d.cols(),
        measure: "unnormalized product surface measure".into(),
        payload: "row-major complex128 little-endian (re, im)".into(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(24 + json.len() + 16 * d.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in &d.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    Ok(out)
}

pub fn data_from_bytes(bytes: &[u8]) -> Result<ScatterData> {
    if bytes.len() < 24 || &bytes[..12] != MAGIC {
        return Err(Error::Format("not a scatter data file".into()));
    }
    let version = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported data format version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(24..24 + hlen).ok_or_else(|| Error::Format("truncated header".into()))?;
    let header: Header = serde_json::from_slice(body)?;
    let payload = &bytes[24 + hlen..];
    let n = header.rows * header.cols;
    if payload.len() != 16 * n {
        return Err(Error::Format(format!("payload has {} bytes, expected {}", payload.len(), 16 * n)));
    }
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    let d = ScatterData { values, ..header.data };
    if d.rows() != header.rows || d.cols() != header.cols {
        return Err(Error::Format("header point sets disagree with the stated shape".into()));
    }
    Ok(d)
}

pub fn save_data(d: &ScatterData, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, data_to_bytes(d)?)?;
    Ok(())
}

pub fn load_data(path: impl AsRef<Path>) -> Result<ScatterData> {
    data_from_bytes(&std::fs::read(path)?)
}
