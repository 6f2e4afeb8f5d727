use num_complex::Complex64;

use super::field::ContrastField;
use super::lattice::Lattice;
use super::FOURIER_SCALE;
use crate::error::{invalid, Result};

/// `(1 + |g|^2)^m` for every retained mode.
pub fn sobolev_weights(lattice: &Lattice, m: f64) -> Vec<f64> {
    lattice
        .modes()
        .map(|g| (1.0 + (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) as f64).powf(m))
        .collect()
}

/// Truncated `H^m` norm.
pub fn sobolev_norm(f: &ContrastField, m: f64) -> f64 {
    sobolev_weights(f.lattice(), m)
        .iter()
        .zip(f.coeffs())
        .map(|(w, c)| w * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `<f, g>_{H^m} = sum (1+|g|^2)^m f^ conj(g^)`
pub fn hm_inner(f: &ContrastField, g: &ContrastField, m: f64) -> Result<Complex64> {
    f.check_same_lattice(g)?;
    Ok(sobolev_weights(f.lattice(), m)
        .iter()
        .zip(f.coeffs().iter().zip(g.coeffs()))
        .map(|(w, (a, b))| a * b.conj() * *w)
        .sum())
}

/// Certified upper bound for `(2 pi)^{-3/2} (sum_{g in Z^3} (1+|g|^2)^{-m})^{1/2}`.
///
/// The sum over `|g|_inf <= K` (with `K >= max(N, 24)`) is exact; the remainder is bounded by
/// comparing each unit cell with the integral of `(|y| - sqrt(3)/2)^{-2m}` over `|y| >= K + 1/2`.
pub fn embedding_constant(m: f64, lattice: &Lattice) -> Result<f64> {
    if !(m > 1.5) {
        return invalid(format!("embedding constant needs m > 3/2 (got {m}); the lattice sum diverges"));
    }
    let k = lattice.max_degree.max(24) as i64;
    // accumulate shells from the outside in to limit rounding
    let mut head = 0.0;
    for a in (-k..=k).rev() {
        for b in -k..=k {
            for c in -k..=k {
                head += (1.0 + (a * a + b * b + c * c) as f64).powf(-m);
            }
        }
    }
    let half_diag = 3f64.sqrt() / 2.0;
    let u0 = k as f64 + 0.5 - half_diag;
    let tail = 4.0 * std::f64::consts::PI * (1.0 + half_diag / u0).powi(2) * u0.powf(3.0 - 2.0 * m) / (2.0 * m - 3.0);
    Ok(FOURIER_SCALE * (head + tail).sqrt())
}
