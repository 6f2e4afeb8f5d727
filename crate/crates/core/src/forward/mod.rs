//! Lippmann-Schwinger forward solver and near/far-field data.
//!
//! The total field solves `u + k^2 int Phi(x - y) f(y) u(y) dy = u_inc` with
//! `Phi(x) = exp(i k |x|) / (4 pi |x|)`. The kernel is cut off at the periodization radius `L`
//! and the equation is posed on a periodic cube of side `L + 2 pi`, so the FFT convolution is
//! exact for points in the contrast support.
//!
//! Far-field pattern: `u_inf(x_hat) = -k^2 / (4 pi) int exp(-i k x_hat.y) f(y) u(y) dy`.

mod data;
mod grid;
mod incident;
mod model;
mod operator;
mod solver;
mod sphere;

pub use data::{data_distance, data_from_bytes, data_norm, data_to_bytes, load_data, save_data, DataKind, ScatterData};
pub use grid::{SolverGrid, TruncatedKernel};
pub use incident::{fundamental_solution, Incidence, IncidentField};
pub use model::{BallContrast, ContrastModel};
pub use operator::{ForwardOperator, Linearization};
pub use solver::{Discretization, LsSolver, SolverConfig, TotalField};
pub use sphere::SpherePoints;

use crate::error::Result;
use crate::spectral::ContrastField;

/// Near-field data `w_f(x, y)` on the sphere of radius `radius`.
pub fn near_field_data(
    f: &dyn ContrastModel,
    kappa: f64,
    radius: f64,
    n_points: usize,
    cfg: &SolverConfig,
) -> Result<ScatterData> {
    ForwardOperator::near(kappa, radius, n_points, cfg)?.evaluate(f)
}

/// Far-field data `u_inf(x_hat, d)` on `n_dirs` incident and observation directions.
pub fn far_field_data(f: &dyn ContrastModel, kappa: f64, n_dirs: usize, cfg: &SolverConfig) -> Result<ScatterData> {
    ForwardOperator::far(kappa, n_dirs, cfg)?.evaluate(f)
}

/// Gradient of `|F(f) - g|^2` for `residual = F(f) - g`.
pub fn frechet_adjoint_apply(op: &ForwardOperator, f: &ContrastField, residual: &ScatterData) -> Result<ContrastField> {
    op.frechet_adjoint_apply(f, residual)
}
