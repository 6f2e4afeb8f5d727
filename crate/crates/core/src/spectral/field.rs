use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use super::FOURIER_SCALE;
use crate::cutoff::radial_window;
use crate::error::{Error, Result};
use crate::fft::{bin_of, Fft3};

/// Tolerance on `max Im f` and `max Re f - 1` for membership in the admissible set.
pub const IM_TOL: f64 = 1e-10;
/// Relative tolerance on `|f|` at grid points outside the ball of radius pi.
pub const SUPPORT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldFlags {
    /// `Im f <= 0` and `Re f <= 1` on the grid
    pub in_d: bool,
    /// `|f|` negligible at grid points with `|x| > pi`
    pub supported_in_ball: bool,
    pub max_im: f64,
    pub max_re: f64,
    /// `max_{|x|>pi} |f| / max |f|`
    pub support_violation: f64,
}

/// Complex contrast on `(-pi, pi)^3` stored by its lattice coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastField {
    lattice: Lattice,
    coeffs: Vec<Complex64>,
    flags: FieldFlags,
}

fn parity(g: [i64; 3]) -> f64 {
    if (g[0] + g[1] + g[2]).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl ContrastField {
    pub fn zeros(lattice: Lattice) -> Self {
        ContrastField {
            lattice,
            coeffs: vec![Complex64::default(); lattice.n_modes()],
            flags: FieldFlags { in_d: true, supported_in_ball: true, ..Default::default() },
        }
    }

    pub fn from_coeffs(lattice: Lattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.n_modes() {
            return Err(Error::DimensionMismatch { expected: lattice.n_modes(), got: coeffs.len() });
        }
        let mut f = ContrastField { lattice, coeffs, flags: FieldFlags::default() };
        f.refresh_flags();
        Ok(f)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn flags(&self) -> &FieldFlags {
        &self.flags
    }

    pub fn support_radius(&self) -> f64 {
        PI
    }

    /// Coefficient at `g`, zero outside the retained lattice.
    pub fn coeff(&self, g: [i64; 3]) -> Complex64 {
        self.lattice.index(g).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Samples on the lattice grid.
    pub fn synthesize(&self) -> Vec<Complex64> {
        let g = self.lattice.grid_size;
        let mut buf = vec![Complex64::default(); g * g * g];
        for (i, c) in self.coeffs.iter().enumerate() {
            let gam = self.lattice.gamma(i);
            let b = (bin_of(gam[0], g) * g + bin_of(gam[1], g)) * g + bin_of(gam[2], g);
            buf[b] = c * parity(gam);
        }
        Fft3::new(g).inverse(&mut buf);
        for v in buf.iter_mut() {
            *v *= FOURIER_SCALE;
        }
        buf
    }

    /// Direct evaluation of the trigonometric polynomial at arbitrary points.
    pub fn eval_points(&self, points: &[[f64; 3]]) -> Vec<Complex64> {
        let n = self.lattice.max_degree as i64;
        let s = self.lattice.side();
        let mut e = vec![[Complex64::default(); 3]; s];
        points
            .iter()
            .map(|x| {
                for (k, row) in e.iter_mut().enumerate() {
                    let g = (k as i64 - n) as f64;
                    for a in 0..3 {
                        row[a] = Complex64::from_polar(1.0, g * x[a]);
                    }
                }
                let mut acc = Complex64::default();
                let mut idx = 0;
                for a in 0..s {
                    for b in 0..s {
                        let eab = e[a][0] * e[b][1];
                        let mut inner = Complex64::default();
                        for ec in e.iter() {
                            inner += self.coeffs[idx] * ec[2];
                            idx += 1;
                        }
                        acc += eab * inner;
                    }
                }
                acc * FOURIER_SCALE
            })
            .collect()
    }

    /// Maximum of `|f|` over the lattice grid.
    pub fn sup_norm_grid(&self) -> f64 {
        self.synthesize().iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::default())
    }

    /// `a * self + b * other`
    pub fn lin_comb(&self, a: f64, other: &ContrastField, b: f64) -> Result<ContrastField> {
        self.check_same_lattice(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x * a + y * b).collect();
        ContrastField::from_coeffs(self.lattice, coeffs)
    }

    pub fn sub(&self, other: &ContrastField) -> Result<ContrastField> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &ContrastField) -> Result<ContrastField> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn scaled(&self, a: f64) -> ContrastField {
        let coeffs = self.coeffs.iter().map(|x| x * a).collect();
        ContrastField::from_coeffs(self.lattice, coeffs).expect("same lattice")
    }

    pub(crate) fn check_same_lattice(&self, other: &ContrastField) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::InvalidArgument("fields live on different lattices".into()));
        }
        Ok(())
    }

    fn refresh_flags(&mut self) {
        let samples = self.synthesize();
        let mut max_im = f64::NEG_INFINITY;
        let mut max_re = f64::NEG_INFINITY;
        let mut max_abs = 0.0f64;
        let mut max_out = 0.0f64;
        for (i, v) in samples.iter().enumerate() {
            max_im = max_im.max(v.im);
            max_re = max_re.max(v.re);
            max_abs = max_abs.max(v.norm());
            let x = self.lattice.grid_point(i);
            if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > PI * PI {
                max_out = max_out.max(v.norm());
            }
        }
        let violation = if max_abs > 0.0 { max_out / max_abs } else { 0.0 };
        self.flags = FieldFlags {
            in_d: max_im <= IM_TOL && max_re <= 1.0 + IM_TOL,
            supported_in_ball: violation <= SUPPORT_TOL,
            max_im,
            max_re,
            support_violation: violation,
        };
    }
}

/// Trapezoidal (FFT) discretization of the coefficient integral from grid samples.
pub fn analyze(samples: &[Complex64], lattice: Lattice) -> Result<ContrastField> {
    let g = lattice.grid_size;
    if samples.len() != g * g * g {
        return Err(Error::DimensionMismatch { expected: g * g * g, got: samples.len() });
    }
    let mut buf = samples.to_vec();
    Fft3::new(g).forward(&mut buf);
    let scale = (2.0 * PI).powf(1.5) / (g * g * g) as f64;
    let coeffs = (0..lattice.n_modes())
        .map(|i| {
            let gam = lattice.gamma(i);
            let b = (bin_of(gam[0], g) * g + bin_of(gam[1], g)) * g + bin_of(gam[2], g);
            buf[b] * (scale * parity(gam))
        })
        .collect();
    ContrastField::from_coeffs(lattice, coeffs)
}

/// Clamps `Re f <= 1`, `Im f <= 0` pointwise, multiplies by a smooth radial cutoff that vanishes
/// outside `B_pi`, and re-analyzes.
///
/// The cutoff is 1 up to `max(0.9 pi, r*)` with `r*` the largest grid radius below pi, so no grid
/// point lies in its transition band and the map is idempotent.
pub fn project_to_d(f: &ContrastField) -> ContrastField {
    let lattice = *f.lattice();
    let r_inner = cutoff_inner_radius(&lattice);
    let mut samples = f.synthesize();
    for (i, v) in samples.iter_mut().enumerate() {
        let x = lattice.grid_point(i);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let w = radial_window(r, r_inner, PI);
        *v = Complex64::new(v.re.min(1.0), v.im.min(0.0)) * w;
    }
    analyze(&samples, lattice).expect("grid matches lattice")
}

/// Start of the cutoff transition used by [`project_to_d`].
pub fn cutoff_inner_radius(lattice: &Lattice) -> f64 {
    let r_star = (0..lattice.n_grid())
        .map(|i| {
            let x = lattice.grid_point(i);
            (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
        })
        .filter(|r| *r < PI)
        .fold(0.0, f64::max);
    r_star.max(0.9 * PI)
}
