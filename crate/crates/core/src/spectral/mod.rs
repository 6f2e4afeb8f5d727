//! Fourier-lattice representation of contrasts on the cube `(-pi, pi)^3`.
//!
//! Coefficients follow `f^(g) = (2 pi)^{-3/2} int_Q f(x) exp(-i g.x) dx`
//! and are stored for `|g|_inf <= N` in lexicographic order (`g1` outermost).

mod field;
mod format;
mod lattice;
mod norms;
mod sums;
mod tensor;

pub use field::{analyze, cutoff_inner_radius, project_to_d, ContrastField, FieldFlags, IM_TOL, SUPPORT_TOL};
pub use format::{field_from_bytes, field_to_bytes, load_field, save_field};
pub use lattice::{Lattice, SobolevParams};
pub use norms::{embedding_constant, hm_inner, sobolev_norm, sobolev_weights};
pub use sums::{
    high_freq_split_check, lattice_sum, lattice_sum_bound_check, lattice_sum_by_shells, loglog_slope, LatticeSumReport,
    SplitReport,
};
pub use tensor::TensorSynth;

/// `(2 pi)^{-3/2}`
pub const FOURIER_SCALE: f64 = 0.063_493_635_934_240_97;
