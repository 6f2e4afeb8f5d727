use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::SolverGrid;
use crate::cutoff::radial_window;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Incidence {
    /// `exp(i k |x - y|) / (4 pi |x - y|)`
    PointSource { y: [f64; 3] },
    /// `exp(i k x.d)`
    PlaneWave { d: [f64; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentField {
    pub kind: Incidence,
    pub kappa: f64,
}

/// Outgoing fundamental solution of the Helmholtz equation.
pub fn fundamental_solution(kappa: f64, x: [f64; 3], y: [f64; 3]) -> Complex64 {
    let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
    Complex64::from_polar(1.0 / (4.0 * PI * r), kappa * r)
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl IncidentField {
    pub fn point_source(y: [f64; 3], kappa: f64) -> Result<Self> {
        if !(norm3(y) > PI) {
            return invalid(format!("point source at radius {} must lie outside the ball of radius pi", norm3(y)));
        }
        Self::checked(Incidence::PointSource { y }, kappa)
    }

    /// Plane wave; `d` is normalized.
    pub fn plane_wave(d: [f64; 3], kappa: f64) -> Result<Self> {
        let n = norm3(d);
        if !(n > 0.0) {
            return invalid("plane-wave direction must be nonzero");
        }
        Self::checked(Incidence::PlaneWave { d: [d[0] / n, d[1] / n, d[2] / n] }, kappa)
    }

    fn checked(kind: Incidence, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return invalid("wavenumber must be positive");
        }
        Ok(IncidentField { kind, kappa })
    }

    pub fn eval(&self, x: [f64; 3]) -> Complex64 {
        match self.kind {
            Incidence::PointSource { y } => fundamental_solution(self.kappa, x, y),
            Incidence::PlaneWave { d } => Complex64::from_polar(1.0, self.kappa * (x[0] * d[0] + x[1] * d[1] + x[2] * d[2])),
        }
    }

    /// Distance from the origin to the nearest singularity (infinite for plane waves).
    pub fn singular_radius(&self) -> f64 {
        match self.kind {
            Incidence::PointSource { y } => norm3(y),
            Incidence::PlaneWave { .. } => f64::INFINITY,
        }
    }

    /// Samples on the grid, multiplied by a smooth radial window that equals 1 on `B_{r_in}`
    /// and vanishes at `r_in + frac (R_s - r_in)`, `R_s` the singular radius capped at `P/2`.
    pub fn windowed_samples(&self, grid: &SolverGrid, r_in: f64, frac: f64) -> Vec<Complex64> {
        let outer = self.singular_radius().min(0.5 * grid.side);
        let r_out = r_in + frac * (outer - r_in).max(0.0);
        (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                let w = radial_window(norm3(x), r_in, r_out);
                if w == 0.0 {
                    Complex64::default()
                } else {
                    self.eval(x) * w
                }
            })
            .collect()
    }

    /// Unwindowed samples on the grid.
    pub fn samples(&self, grid: &SolverGrid) -> Vec<Complex64> {
        (0..grid.len()).map(|i| self.eval(grid.point(i))).collect()
    }
}
