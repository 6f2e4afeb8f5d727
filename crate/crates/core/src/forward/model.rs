use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::SolverGrid;
use crate::spectral::{ContrastField, TensorSynth};

/// A contrast the forward solver can discretize.
pub trait ContrastModel: Sync {
    /// Radius of a ball centred at the origin containing the support.
    fn support_radius(&self) -> f64;

    /// Pointwise values at the nodes of `grid`.
    fn grid_samples(&self, grid: &SolverGrid) -> Vec<Complex64>;

    /// Continuous Fourier transform `int f(x) exp(-i xi.x) dx`, when known in closed form.
    fn spectrum(&self, _xi: [f64; 3]) -> Option<Complex64> {
        None
    }

    /// Whether the contrast satisfies `Im f <= 0`, `Re f <= 1` and `supp f` in the ball of radius pi.
    fn is_admissible(&self) -> bool;
}

impl ContrastModel for ContrastField {
    fn support_radius(&self) -> f64 {
        PI
    }

    /// Trigonometric polynomial at the nodes, extended by zero outside the ball of radius pi.
    fn grid_samples(&self, grid: &SolverGrid) -> Vec<Complex64> {
        let synth = TensorSynth::new(self.lattice().max_degree, &grid.nodes());
        let mut v = synth.synth(self.coeffs());
        for (i, s) in v.iter_mut().enumerate() {
            let x = grid.point(i);
            if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > PI * PI {
                *s = Complex64::default();
            }
        }
        v
    }

    fn is_admissible(&self) -> bool {
        self.flags().in_d && self.flags().supported_in_ball
    }
}

/// Constant contrast `value` on the ball of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallContrast {
    pub radius: f64,
    pub value: Complex64,
}

impl BallContrast {
    pub fn new(radius: f64, value: Complex64) -> Self {
        BallContrast { radius, value }
    }

    /// Ball with constant refractive index `n` (contrast `1 - n`).
    pub fn with_index(radius: f64, n: f64) -> Self {
        BallContrast { radius, value: Complex64::new(1.0 - n, 0.0) }
    }
}

impl ContrastModel for BallContrast {
    fn support_radius(&self) -> f64 {
        self.radius
    }

    fn grid_samples(&self, grid: &SolverGrid) -> Vec<Complex64> {
        let r2 = self.radius * self.radius;
        (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < r2 {
                    self.value
                } else {
                    Complex64::default()
                }
            })
            .collect()
    }

    fn spectrum(&self, xi: [f64; 3]) -> Option<Complex64> {
        let k = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        let a = self.radius;
        let ka = k * a;
        let shape = if ka < 1e-3 {
            4.0 * PI * a.powi(3) / 3.0 * (1.0 - ka * ka / 10.0)
        } else {
            4.0 * PI * (ka.sin() - ka * ka.cos()) / k.powi(3)
        };
        Some(self.value * shape)
    }

    fn is_admissible(&self) -> bool {
        self.value.im <= 0.0 && self.value.re <= 1.0 && self.radius <= PI
    }
}
