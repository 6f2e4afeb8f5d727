//! Quadrature point sets on the unit sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::gauss_legendre;

/// Unit vectors with positive quadrature weights summing to `4 pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoints {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SpherePoints {
    /// Gauss-Legendre in `cos(theta)` times the uniform rule in `phi` (offset by `phi0`).
    pub fn gauss_product(n_theta: usize, n_phi: usize, phi0: f64) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = phi0 + k as f64 * dphi;
                points.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(wt * dphi);
            }
        }
        SpherePoints { points, weights }
    }

    /// Fibonacci spiral with equal weights.
    pub fn fibonacci(n: usize, phi0: f64) -> Self {
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = (0..n)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = phi0 + golden * i as f64;
                [r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
        SpherePoints { points, weights: vec![4.0 * PI / n as f64; n] }
    }

    fn product_shape(n: usize) -> Option<usize> {
        let k = ((n / 2) as f64).sqrt().round() as usize;
        (k >= 1 && 2 * k * k == n).then_some(k)
    }

    /// Standard set of `n >= 6` points: the `k x 2k` Gauss product rule when `n = 2k^2`,
    /// otherwise a Fibonacci spiral.
    pub fn standard(n: usize) -> Result<Self> {
        if n < 6 {
            return invalid(format!("need at least 6 sphere points, got {n}"));
        }
        Ok(match Self::product_shape(n) {
            Some(k) => Self::gauss_product(k, 2 * k, 0.0),
            None => Self::fibonacci(n, 0.0),
        })
    }

    /// Companion set of the same size, disjoint from [`standard`](Self::standard).
    pub fn staggered(n: usize) -> Result<Self> {
        if n < 6 {
            return invalid(format!("need at least 6 sphere points, got {n}"));
        }
        Ok(match Self::product_shape(n) {
            Some(k) => Self::gauss_product(k, 2 * k, PI / (2 * k) as f64),
            None => Self::fibonacci(n, PI / n as f64),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Scaled copy on the sphere of radius `r` (weights scale by `r^2`).
    pub fn scaled(&self, r: f64) -> Self {
        SpherePoints {
            points: self.points.iter().map(|p| [p[0] * r, p[1] * r, p[2] * r]).collect(),
            weights: self.weights.iter().map(|w| w * r * r).collect(),
        }
    }

    /// Index of the point `-p_i`, if present.
    pub fn antipode(&self, i: usize) -> Option<usize> {
        let p = self.points[i];
        let scale = p.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        self.points.iter().position(|q| {
            ((q[0] + p[0]).powi(2) + (q[1] + p[1]).powi(2) + (q[2] + p[2]).powi(2)).sqrt() <= 1e-12 * scale
        })
    }
}
