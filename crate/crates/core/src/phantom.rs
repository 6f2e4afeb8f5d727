//! Test contrasts defined by samples on the lattice grid.
//!
//! Samples are taken on the grid of the lattice and analyzed, so on the minimal grid
//! (`2N + 1` points per axis) the resulting field reproduces them exactly and admissibility
//! holds to round-off whenever the samples are admissible.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::cutoff::radial_window;
use crate::error::{invalid, Result};
use crate::spectral::{analyze, ContrastField, Lattice};

fn from_radial(lattice: Lattice, profile: impl Fn([f64; 3], f64) -> Complex64) -> Result<ContrastField> {
    let samples: Vec<Complex64> = (0..lattice.n_grid())
        .map(|i| {
            let x = lattice.grid_point(i);
            profile(x, (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
        })
        .collect();
    analyze(&samples, lattice)
}

fn check_value(value: Complex64) -> Result<()> {
    if value.re > 1.0 || value.im > 0.0 {
        return invalid(format!("contrast value {value} violates Re f <= 1, Im f <= 0"));
    }
    Ok(())
}

/// `value * exp(1 - 1 / (1 - (r/radius)^2))` inside the ball of radius `radius <= pi`.
pub fn smooth_bump(lattice: Lattice, value: Complex64, radius: f64) -> Result<ContrastField> {
    check_value(value)?;
    if !(radius > 0.0 && radius <= PI) {
        return invalid("bump radius must lie in (0, pi]");
    }
    from_radial(lattice, |_, r| {
        let q = r / radius;
        if q >= 1.0 {
            Complex64::default()
        } else {
            value * (1.0 - 1.0 / (1.0 - q * q)).exp()
        }
    })
}

/// Ball of constant contrast with a smooth edge between `r0` and `r1 <= pi`.
pub fn smoothed_ball(lattice: Lattice, value: Complex64, r0: f64, r1: f64) -> Result<ContrastField> {
    check_value(value)?;
    if !(0.0 <= r0 && r0 < r1 && r1 <= PI) {
        return invalid("smoothed ball needs 0 <= r0 < r1 <= pi");
    }
    from_radial(lattice, |_, r| value * radial_window(r, r0, r1))
}

/// Windowed real Fourier mode `amplitude cos(g.x + phase) w(|x|)`.
pub fn windowed_mode(lattice: Lattice, gamma: [i64; 3], amplitude: f64, phase: f64) -> Result<ContrastField> {
    from_radial(lattice, |x, r| {
        let arg = gamma[0] as f64 * x[0] + gamma[1] as f64 * x[1] + gamma[2] as f64 * x[2] + phase;
        Complex64::new(amplitude * arg.cos() * radial_window(r, 0.6 * PI, 0.9 * PI), 0.0)
    })
}

/// Random real field with decaying spectrum, windowed to the ball and scaled to grid maximum
/// `amplitude`; `smoothness` sets the decay `(1 + |g|^2)^(-smoothness/2)` of the random
/// coefficients before windowing.
pub fn random_band_limited<R: Rng + ?Sized>(
    lattice: Lattice,
    amplitude: f64,
    smoothness: f64,
    rng: &mut R,
) -> Result<ContrastField> {
    let n = lattice.max_degree as i64;
    let mut modes = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            for c in -n..=n {
                let w = (1.0 + (a * a + b * b + c * c) as f64).powf(-smoothness / 2.0);
                modes.push(([a as f64, b as f64, c as f64], w * rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
            }
        }
    }
    let raw: Vec<f64> = (0..lattice.n_grid())
        .map(|i| {
            let x = lattice.grid_point(i);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let s: f64 = modes.iter().map(|(g, w, p)| w * (g[0] * x[0] + g[1] * x[1] + g[2] * x[2] + p).cos()).sum();
            s * radial_window(r, 0.6 * PI, 0.9 * PI)
        })
        .collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(ContrastField::zeros(lattice));
    }
    let samples: Vec<Complex64> = raw.iter().map(|v| Complex64::new((v * amplitude / peak).min(1.0), 0.0)).collect();
    analyze(&samples, lattice)
}

/// Nonnegative windowed mode `amplitude (1 + cos(g.x)) / 2 w(|x|)`; subtracting it from an
/// admissible contrast keeps `Re f <= 1` for any amplitude.
pub fn nonnegative_mode(lattice: Lattice, gamma: [i64; 3], amplitude: f64) -> Result<ContrastField> {
    if !(amplitude >= 0.0) {
        return invalid("amplitude must be nonnegative");
    }
    from_radial(lattice, |x, r| {
        let arg = gamma[0] as f64 * x[0] + gamma[1] as f64 * x[1] + gamma[2] as f64 * x[2];
        Complex64::new(0.5 * amplitude * (1.0 + arg.cos()) * radial_window(r, 0.6 * PI, 0.9 * PI), 0.0)
    })
}
