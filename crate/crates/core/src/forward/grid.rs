use num_complex::Complex64;

use crate::fft::signed_freq;
use crate::quadrature::composite;

/// Uniform periodic grid on the cube `[-P/2, P/2)^3`, `x_j = -P/2 + j h`, `h = P / M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverGrid {
    pub size: usize,
    pub side: f64,
}

impl SolverGrid {
    pub fn new(size: usize, side: f64) -> Self {
        SolverGrid { size, side }
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.size as f64
    }

    pub fn len(&self) -> usize {
        self.size.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.side + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.coord(j)).collect()
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.size;
        [self.coord(idx / (m * m)), self.coord((idx / m) % m), self.coord(idx % m)]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Angular frequency `2 pi n / P` of FFT bin `idx` along one axis.
    pub fn freq(&self, idx: usize) -> f64 {
        2.0 * std::f64::consts::PI * signed_freq(idx, self.size) as f64 / self.side
    }

    /// `|xi|` for every FFT bin, row-major.
    pub fn freq_norms(&self) -> Vec<f64> {
        let m = self.size;
        let f: Vec<f64> = (0..m).map(|i| self.freq(i)).collect();
        let mut out = Vec::with_capacity(m * m * m);
        for a in &f {
            for b in &f {
                for c in &f {
                    out.push((a * a + b * b + c * c).sqrt());
                }
            }
        }
        out
    }
}

/// Fourier transform of the fundamental solution `exp(i k |x|) / (4 pi |x|)` cut off at radius `L`:
/// `(1/xi) int_0^L exp(i k r) sin(xi r) dr`.
#[derive(Debug, Clone)]
pub struct TruncatedKernel {
    kappa: f64,
    radius: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TruncatedKernel {
    pub fn new(kappa: f64, radius: f64) -> Self {
        let panels = ((radius * (kappa + 1.0)) as usize).max(4);
        let (nodes, weights) = composite(0.0, radius, panels, 24);
        TruncatedKernel { kappa, radius, nodes, weights }
    }

    fn by_quadrature(&self, xi: f64) -> Complex64 {
        let mut acc = Complex64::default();
        for (r, w) in self.nodes.iter().zip(&self.weights) {
            let s = if xi > 0.0 { (xi * r).sin() / xi } else { *r };
            acc += Complex64::from_polar(w * s, self.kappa * r);
        }
        acc
    }

    pub fn eval(&self, xi: f64) -> Complex64 {
        let (k, l) = (self.kappa, self.radius);
        let d = k * k - xi * xi;
        if d.abs() < 0.05 * k * k || xi < 1e-8 {
            if xi < 1e-8 {
                let e = Complex64::from_polar(1.0, k * l);
                return (e * Complex64::new(1.0, -k * l) - 1.0) / (k * k);
            }
            return self.by_quadrature(xi);
        }
        let e = Complex64::from_polar(1.0, k * l);
        (e * Complex64::new((xi * l).cos(), -(k / xi) * (xi * l).sin()) - 1.0) / d
    }
}
