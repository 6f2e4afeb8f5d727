//! Forward solves memoized on disk under `$VSC_LAB_CACHE`, keyed by the contrast bytes and the
//! full measurement configuration (incidences, receivers, solver settings).

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use super::manifest::sha256_hex;
use crate::error::Result;
use crate::forward::{data_distance, data_from_bytes, data_to_bytes, ForwardOperator, ScatterData};
use crate::spectral::{field_to_bytes, ContrastField};

pub const CACHE_ENV: &str = "VSC_LAB_CACHE";

pub fn cache_key(op: &ForwardOperator, f: &ContrastField) -> String {
    let cfg = json!({
        "kind": op.kind,
        "kappa": op.kappa,
        "sources": op.sources,
        "receivers": op.receivers,
        "solver": op.solver,
    });
    let mut bytes = field_to_bytes(f);
    bytes.extend_from_slice(cfg.to_string().as_bytes());
    sha256_hex(&bytes)
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// `op.evaluate(f)`, read from or stored in the cache when it is enabled. Unreadable entries are
/// recomputed and overwritten.
pub fn evaluate(op: &ForwardOperator, f: &ContrastField) -> Result<ScatterData> {
    let Some(dir) = cache_dir() else {
        return op.evaluate(f);
    };
    let path = dir.join(format!("{}.vscdata", cache_key(op, f)));
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(d) = data_from_bytes(&bytes) {
            return Ok(d);
        }
    }
    let d = op.evaluate(f)?;
    std::fs::create_dir_all(&dir)?;
    // write then rename so concurrent workers never read a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, data_to_bytes(&d)?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(d)
}

/// Data distances `|F(f) - F(reference)|` for every field, in parallel.
pub fn distances(op: &ForwardOperator, reference: &ContrastField, fields: &[&ContrastField]) -> Result<Vec<f64>> {
    let r = evaluate(op, reference)?;
    fields.par_iter().map(|f| data_distance(&evaluate(op, f)?, &r)).collect()
}
