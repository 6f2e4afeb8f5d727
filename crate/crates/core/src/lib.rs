//! Numerical laboratory for acoustic inverse medium scattering.
//!
//! Contrasts `f = 1 - n` live on the cube `(-pi, pi)^3` as Fourier-lattice fields
//! ([`spectral`]). The [`forward`] module solves the Lippmann-Schwinger equation and
//! assembles near-field and far-field data, [`gos`] builds geometrical optics solutions,
//! [`regularization`] implements Sobolev-penalized Tikhonov regularization with the
//! logarithmic parameter rule, and [`vsc`] evaluates and calibrates variational source
//! conditions and stability estimates.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cutoff;
pub mod error;
pub mod fft;
pub mod experiment;
pub mod forward;
pub mod gos;
pub mod krylov;
pub mod phantom;
pub mod quadrature;
pub mod regularization;
pub mod spectral;
pub mod vsc;

pub use error::{Error, Result};
pub use num_complex::Complex64;
