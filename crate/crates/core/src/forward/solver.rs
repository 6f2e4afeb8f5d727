use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{SolverGrid, TruncatedKernel};
use super::incident::IncidentField;
use super::model::ContrastModel;
use crate::error::{invalid, Error, Result};
use crate::fft::{bin_of, signed_freq, Fft3};
use crate::krylov::{gmres, norm, GmresOptions};

/// How the volume integral operator is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// Galerkin when the contrast has a closed-form spectrum, collocation otherwise.
    Auto,
    /// Pointwise products on the grid.
    Collocation,
    /// Fourier-Galerkin with exact contrast spectrum and dealiased products.
    Galerkin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// grid points per axis (even)
    pub grid_size: usize,
    /// radius `L` at which the fundamental solution is cut off; the periodic cube has side `L + 2 pi`
    pub periodization_radius: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
    pub discretization: Discretization,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_size: 32,
            periodization_radius: 2.4 * PI,
            tolerance: 1e-8,
            max_iterations: 500,
            restart: 60,
            discretization: Discretization::Auto,
        }
    }
}

impl SolverConfig {
    pub fn with_grid(mut self, m: usize) -> Self {
        self.grid_size = m;
        self
    }

    pub fn with_radius(mut self, l: f64) -> Self {
        self.periodization_radius = l;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return invalid(format!("solver tolerance {} must lie in (0, 1)", self.tolerance));
        }
        if self.grid_size < 8 || self.grid_size % 2 != 0 {
            return invalid(format!("solver grid size {} must be even and at least 8", self.grid_size));
        }
        if !(self.periodization_radius >= 2.0 * PI) {
            return invalid(format!(
                "periodization radius {} must be at least 2 pi, the diameter of the contrast support",
                self.periodization_radius
            ));
        }
        if self.max_iterations == 0 || self.restart == 0 {
            return invalid("iteration limits must be positive");
        }
        Ok(())
    }

    /// Side of the periodic cube.
    pub fn cube_side(&self) -> f64 {
        self.periodization_radius + 2.0 * PI
    }
}

/// Grid samples of a total field together with solve diagnostics.
#[derive(Debug, Clone)]
pub struct TotalField {
    pub values: Vec<Complex64>,
    pub iterations: usize,
    /// relative residual of the discrete integral equation
    pub residual: f64,
}

enum Contrast {
    Collocation { samples: Vec<Complex64>, support: Vec<usize> },
    Galerkin { fine: Vec<Complex64>, fft_fine: Fft3 },
}

/// Lippmann-Schwinger solver `u + k^2 V[f u] = u_inc` for one contrast and wavenumber.
pub struct LsSolver {
    kappa: f64,
    grid: SolverGrid,
    cfg: SolverConfig,
    kernel: Vec<Complex64>,
    fft: Fft3,
    contrast: Contrast,
    r_in: f64,
    zero: bool,
}

/// Window fraction between the contrast support and the nearest source for incident fields.
const INCIDENT_WINDOW: f64 = 0.85;
/// Same for measurement functions in Galerkin mode.
const MEASURE_WINDOW: f64 = 0.6;

impl LsSolver {
    pub fn new(model: &dyn ContrastModel, kappa: f64, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if !(kappa > 0.0) {
            return invalid("wavenumber must be positive");
        }
        if !model.is_admissible() {
            return Err(Error::NotAdmissible("forward solves require a contrast in the admissible set".into()));
        }
        let r_in = model.support_radius();
        if 2.0 * r_in > cfg.periodization_radius + 1e-12 {
            return invalid("periodization radius is smaller than the support diameter");
        }
        let m = cfg.grid_size;
        let grid = SolverGrid::new(m, cfg.cube_side());
        let ker = TruncatedKernel::new(kappa, cfg.periodization_radius);
        let kernel = grid.freq_norms().into_iter().map(|xi| ker.eval(xi)).collect();
        let galerkin = match cfg.discretization {
            Discretization::Auto => model.spectrum([0.0; 3]).is_some(),
            Discretization::Collocation => false,
            Discretization::Galerkin => {
                if model.spectrum([0.0; 3]).is_none() {
                    return invalid("Galerkin discretization needs a contrast with a closed-form spectrum");
                }
                true
            }
        };
        let (contrast, zero) = if galerkin {
            let fine = fine_samples(model, &grid);
            let zero = fine.iter().all(|v| v.norm() == 0.0);
            (Contrast::Galerkin { fine, fft_fine: Fft3::new(2 * m) }, zero)
        } else {
            let samples = model.grid_samples(&grid);
            let support: Vec<usize> = (0..samples.len()).filter(|&i| samples[i] != Complex64::default()).collect();
            let zero = support.is_empty();
            (Contrast::Collocation { samples, support }, zero)
        };
        Ok(LsSolver { kappa, grid, cfg: *cfg, kernel, fft: Fft3::new(m), contrast, r_in, zero })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn grid(&self) -> &SolverGrid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn is_galerkin(&self) -> bool {
        matches!(self.contrast, Contrast::Galerkin { .. })
    }

    /// Contrast samples and support indices (collocation mode only).
    pub fn collocation_contrast(&self) -> Option<(&[Complex64], &[usize])> {
        match &self.contrast {
            Contrast::Collocation { samples, support } => Some((samples, support)),
            Contrast::Galerkin { .. } => None,
        }
    }

    fn zero_nyquist(&self, c: &mut [Complex64]) {
        let m = self.grid.size;
        let half = m / 2;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if i == half || j == half || k == half {
                        c[(i * m + j) * m + k] = Complex64::default();
                    }
                }
            }
        }
    }

    /// Band-limited coefficients (FFT ordering, scaled by `1/M^3`, Nyquist removed).
    fn band_coeffs(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut c = u.to_vec();
        self.fft.forward(&mut c);
        let s = 1.0 / self.grid.len() as f64;
        c.iter_mut().for_each(|v| *v *= s);
        self.zero_nyquist(&mut c);
        c
    }

    /// Coefficients of `P(f u)` in the band from band coefficients of `u`.
    fn galerkin_product(&self, a: &[Complex64], fine: &[Complex64], fft_fine: &Fft3) -> Vec<Complex64> {
        let m = self.grid.size;
        let m2 = 2 * m;
        let mut big = vec![Complex64::default(); m2 * m2 * m2];
        let map = |i: usize| bin_of(signed_freq(i, m), m2);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let v = a[(i * m + j) * m + k];
                    if v != Complex64::default() {
                        big[(map(i) * m2 + map(j)) * m2 + map(k)] = v;
                    }
                }
            }
        }
        fft_fine.inverse(&mut big);
        for (b, f) in big.iter_mut().zip(fine) {
            *b *= f;
        }
        fft_fine.forward(&mut big);
        let s = 1.0 / (m2 * m2 * m2) as f64;
        let mut out = vec![Complex64::default(); m * m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out[(i * m + j) * m + k] = big[(map(i) * m2 + map(j)) * m2 + map(k)] * s;
                }
            }
        }
        self.zero_nyquist(&mut out);
        out
    }

    /// `out = u + k^2 V[f u]`
    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let k2 = self.kappa * self.kappa;
        match &self.contrast {
            Contrast::Collocation { samples, .. } => {
                for ((o, x), f) in out.iter_mut().zip(u).zip(samples) {
                    *o = x * f;
                }
                self.fft.forward(out);
                let s = k2 / self.grid.len() as f64;
                for (o, k) in out.iter_mut().zip(&self.kernel) {
                    *o *= k * s;
                }
                self.fft.inverse(out);
                for (o, x) in out.iter_mut().zip(u) {
                    *o += x;
                }
            }
            Contrast::Galerkin { fine, fft_fine } => {
                let a = self.band_coeffs(u);
                let b = self.galerkin_product(&a, fine, fft_fine);
                for (((o, x), y), k) in out.iter_mut().zip(&a).zip(&b).zip(&self.kernel) {
                    *o = x + y * k * k2;
                }
                self.fft.inverse(out);
            }
        }
    }

    /// Right-hand side for an incident field: windowed samples (band-limited in Galerkin mode).
    pub fn rhs(&self, inc: &IncidentField) -> Vec<Complex64> {
        let b = inc.windowed_samples(&self.grid, self.r_in, INCIDENT_WINDOW);
        if self.is_galerkin() {
            let mut c = self.band_coeffs(&b);
            self.fft.inverse(&mut c);
            c
        } else {
            b
        }
    }

    /// Solves for the total field; the returned residual is verified to be within tolerance.
    pub fn solve(&self, inc: &IncidentField) -> Result<TotalField> {
        if (inc.kappa - self.kappa).abs() > 1e-14 * self.kappa {
            return invalid("incident wavenumber differs from the solver wavenumber");
        }
        let b = self.rhs(inc);
        if self.zero {
            return Ok(TotalField { values: b, iterations: 0, residual: 0.0 });
        }
        let mut x = b.clone();
        let opts = GmresOptions { tol: self.cfg.tolerance, max_iter: self.cfg.max_iterations, restart: self.cfg.restart };
        let out = gmres(|v, o| self.apply(v, o), &b, &mut x, opts);
        let residual = self.residual(&x, &b);
        if !out.converged || residual > self.cfg.tolerance {
            return Err(Error::NoConvergence { iterations: out.iterations, residual });
        }
        Ok(TotalField { values: x, iterations: out.iterations, residual })
    }

    /// `|u + k^2 V[f u] - b| / |b|`
    pub fn residual(&self, u: &[Complex64], b: &[Complex64]) -> f64 {
        let mut au = vec![Complex64::default(); u.len()];
        self.apply(u, &mut au);
        let r: Vec<Complex64> = au.iter().zip(b).map(|(x, y)| x - y).collect();
        let bn = norm(b);
        if bn == 0.0 {
            norm(&r)
        } else {
            norm(&r) / bn
        }
    }

    /// `int f u g dx` for each measurement function `g` (incident fields evaluated without window).
    pub fn measure(&self, u: &TotalField, gs: &[IncidentField]) -> Vec<Complex64> {
        if self.zero {
            return vec![Complex64::default(); gs.len()];
        }
        match &self.contrast {
            Contrast::Collocation { samples, support } => {
                let h3 = self.grid.cell_volume();
                gs.iter()
                    .map(|g| {
                        support.iter().map(|&i| samples[i] * u.values[i] * g.eval(self.grid.point(i))).sum::<Complex64>()
                            * h3
                    })
                    .collect()
            }
            Contrast::Galerkin { fine, fft_fine } => {
                let a = self.band_coeffs(&u.values);
                let b = self.galerkin_product(&a, fine, fft_fine);
                let m = self.grid.size;
                let vol = self.grid.side.powi(3);
                gs.iter()
                    .map(|g| {
                        let w = g.windowed_samples(&self.grid, self.r_in, MEASURE_WINDOW);
                        let cw = self.band_coeffs(&w);
                        let mut acc = Complex64::default();
                        for i in 0..m {
                            let ni = bin_of(-signed_freq(i, m), m);
                            for j in 0..m {
                                let nj = bin_of(-signed_freq(j, m), m);
                                for k in 0..m {
                                    let nk = bin_of(-signed_freq(k, m), m);
                                    acc += b[(i * m + j) * m + k] * cw[(ni * m + nj) * m + nk];
                                }
                            }
                        }
                        acc * vol
                    })
                    .collect()
            }
        }
    }
}

/// Contrast on the doubled grid built from its exact spectrum, truncated to the doubled band.
fn fine_samples(model: &dyn ContrastModel, grid: &SolverGrid) -> Vec<Complex64> {
    let m2 = 2 * grid.size;
    let side = grid.side;
    let vol = side.powi(3);
    let w = 2.0 * PI / side;
    let mut buf = vec![Complex64::default(); m2 * m2 * m2];
    for i in 0..m2 {
        let a = signed_freq(i, m2);
        for j in 0..m2 {
            let b = signed_freq(j, m2);
            for k in 0..m2 {
                let c = signed_freq(k, m2);
                let spec = model.spectrum([w * a as f64, w * b as f64, w * c as f64]).unwrap_or_default();
                let sign = if (a + b + c).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[(i * m2 + j) * m2 + k] = spec * (sign / vol);
            }
        }
    }
    Fft3::new(m2).inverse(&mut buf);
    buf
}
