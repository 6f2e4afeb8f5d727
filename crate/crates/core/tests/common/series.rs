//! Separation-of-variables solution for a homogeneous penetrable ball.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `j_0..=j_lmax` at `x > 0` by Miller's downward recurrence.
pub fn sph_j(lmax: usize, x: f64) -> Vec<f64> {
    let start = lmax + 30 + x as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for n in (1..=start).rev() {
        vals[n - 1] = (2 * n + 1) as f64 / x * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e250 {
            for v in vals.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let scale = if j0.abs() > j1.abs() { j0 / vals[0] } else { j1 / vals[1] };
    vals.truncate(lmax + 1);
    vals.iter().map(|v| v * scale).collect()
}

/// `y_0..=y_lmax` at `x > 0` by upward recurrence.
pub fn sph_y(lmax: usize, x: f64) -> Vec<f64> {
    let mut y = vec![0.0; lmax + 2];
    y[0] = -x.cos() / x;
    y[1] = -x.cos() / (x * x) - x.sin() / x;
    for n in 1..=lmax {
        y[n + 1] = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
    }
    y.truncate(lmax + 1);
    y
}

fn deriv(f: &[f64], x: f64) -> Vec<f64> {
    (0..f.len())
        .map(|l| if l == 0 { -f[1] } else { f[l - 1] - (l + 1) as f64 / x * f[l] })
        .collect()
}

fn legendre(lmax: usize, t: f64) -> Vec<f64> {
    let mut p = vec![1.0, t];
    for l in 1..lmax {
        let next = ((2 * l + 1) as f64 * t * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
        p.push(next);
    }
    p.truncate(lmax + 1);
    p
}

/// Ball of radius `a` with constant refractive index `n` in a background of wavenumber `kappa`.
pub struct BallSeries {
    pub kappa: f64,
    pub lmax: usize,
    pub coeffs: Vec<Complex64>,
}

impl BallSeries {
    pub fn new(kappa: f64, a: f64, n: f64, lmax: usize) -> Self {
        let k1 = kappa * n.sqrt();
        // one extra order so derivatives at lmax are available
        let (je, ye, ji) = (sph_j(lmax + 1, kappa * a), sph_y(lmax + 1, kappa * a), sph_j(lmax + 1, k1 * a));
        let (dje, dye, dji) = (deriv(&je, kappa * a), deriv(&ye, kappa * a), deriv(&ji, k1 * a));
        let coeffs = (0..=lmax)
            .map(|l| {
                let h = Complex64::new(je[l], ye[l]);
                let dh = Complex64::new(dje[l], dye[l]);
                let num = Complex64::new(k1 * dji[l] * je[l] - kappa * dje[l] * ji[l], 0.0);
                let den = dh * (kappa * ji[l]) - h * (k1 * dji[l]);
                num / den
            })
            .collect();
        BallSeries { kappa, lmax, coeffs }
    }

    /// Far-field pattern for the observation/incidence angle cosine `cos_theta = x_hat.d`.
    pub fn far_field(&self, cos_theta: f64) -> Complex64 {
        let p = legendre(self.lmax, cos_theta);
        let s: Complex64 = (0..=self.lmax).map(|l| self.coeffs[l] * ((2 * l + 1) as f64 * p[l])).sum();
        s * Complex64::new(0.0, -1.0 / self.kappa)
    }

    /// Scattered part of the near field for source and receiver on the sphere of radius `r`.
    pub fn near_scattered(&self, r: f64, cos_angle: f64) -> Complex64 {
        let x = self.kappa * r;
        let (j, y) = (sph_j(self.lmax, x), sph_y(self.lmax, x));
        let p = legendre(self.lmax, cos_angle);
        let s: Complex64 = (0..=self.lmax)
            .map(|l| {
                let h = Complex64::new(j[l], y[l]);
                self.coeffs[l] * h * h * ((2 * l + 1) as f64 * p[l])
            })
            .sum();
        s * Complex64::new(0.0, self.kappa / (4.0 * PI))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_closed_forms() {
        for x in [0.3, 1.0, 2.5, 7.0, 15.0] {
            let j = sph_j(3, x);
            let y = sph_y(3, x);
            let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
            let y2 = -(3.0 / (x * x) - 1.0) * x.cos() / x - 3.0 * x.sin() / (x * x);
            assert!((j[2] - j2).abs() < 1e-12, "x={x}");
            assert!((y[2] - y2).abs() < 1e-10 * y2.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn wronskian() {
        for x in [0.5, 3.0, 9.0] {
            let j = sph_j(20, x);
            let y = sph_y(20, x);
            for l in 1..20 {
                let w = j[l] * y[l - 1] - j[l - 1] * y[l];
                assert!((w - 1.0 / (x * x)).abs() < 1e-9 / (x * x), "x={x}, l={l}");
            }
        }
    }
}
