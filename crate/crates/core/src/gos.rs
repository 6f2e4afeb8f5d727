//! Geometrical optics solutions `u = exp(i zeta.x) (1 + v)` with `zeta.zeta = k^2`.
//!
//! `v` solves `Delta v + 2 i zeta.grad v = k^2 f (1 + v)` on a cube of side `2R'`. The cube is
//! aligned with a frame whose first axis is `Im zeta / t`; `v` is expanded on the lattice
//! `(pi / R') (n + (1/2, 0, 0))`, on which the symbol `-(xi.xi + 2 zeta.xi)` has modulus at
//! least `t pi / R'`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::{signed_freq, Fft3};
use crate::krylov::{gmres, GmresOptions};
use crate::spectral::{sobolev_norm, ContrastField};

type C3 = [Complex64; 3];

/// Unconjugated product `a.b`.
pub fn bilinear_dot(a: &C3, b: &C3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrequency {
    pub zeta: C3,
    /// `|Im zeta|`
    pub t: f64,
    pub kappa: f64,
}

impl ComplexFrequency {
    /// Checks `zeta.zeta = k^2` to `1e-12 (1 + |zeta|^2)`.
    pub fn new(zeta: C3, kappa: f64) -> Result<Self> {
        let t = zeta.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        let size: f64 = zeta.iter().map(|z| z.norm_sqr()).sum();
        let err = (bilinear_dot(&zeta, &zeta) - kappa * kappa).norm();
        if err > 1e-12 * (1.0 + size) {
            return invalid(format!("zeta.zeta differs from kappa^2 by {err:.3e}"));
        }
        Ok(ComplexFrequency { zeta, t, kappa })
    }

    pub fn imag_part(&self) -> [f64; 3] {
        [self.zeta[0].im, self.zeta[1].im, self.zeta[2].im]
    }
}

/// Orthonormal pair orthogonal to an integer vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePair {
    pub d1: [f64; 3],
    pub d2: [f64; 3],
}

fn first_nonparallel_axis(v: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        let c = cross(v, e);
        if dot(c, c) > 1e-24 * dot(v, v) {
            return e;
        }
    }
    unreachable!("a nonzero vector is parallel to at most one axis")
}

/// `d1 = (g x e_k) / |g x e_k|` with `e_k` the first axis not parallel to `g`, `d2 = g x d1 / |g|`;
/// `(e1, e2)` for `g = 0`.
pub fn frame_vectors(gamma: [i64; 3]) -> FramePair {
    if gamma == [0, 0, 0] {
        return FramePair { d1: [1.0, 0.0, 0.0], d2: [0.0, 1.0, 0.0] };
    }
    let g = [gamma[0] as f64, gamma[1] as f64, gamma[2] as f64];
    let d1 = normalized(cross(g, first_nonparallel_axis(g)));
    let c = cross(g, d1);
    let gn = dot(g, g).sqrt();
    FramePair { d1, d2: [c[0] / gn, c[1] / gn, c[2] / gn] }
}

/// `zeta = -g/2 + i t d1 + s d2`, `eta = -g/2 - i t d1 - s d2`, `s = sqrt(k^2 + t^2 - |g|^2/4)`.
///
/// Real parts are rounded to a common dyadic grid so that `zeta + eta = -g` holds exactly.
pub fn zeta_eta(gamma: [i64; 3], t: f64, kappa: f64) -> Result<(ComplexFrequency, ComplexFrequency)> {
    let g2 = (gamma[0] * gamma[0] + gamma[1] * gamma[1] + gamma[2] * gamma[2]) as f64;
    let rad = kappa * kappa + t * t - g2 / 4.0;
    if rad < 0.0 {
        return invalid(format!("radicand k^2 + t^2 - |g|^2/4 = {rad} is negative"));
    }
    if !(t >= 0.0) {
        return invalid("t must be nonnegative");
    }
    let s = rad.sqrt();
    let FramePair { d1, d2 } = frame_vectors(gamma);
    let p = [gamma[0] as f64 / 2.0, gamma[1] as f64 / 2.0, gamma[2] as f64 / 2.0];
    let w = [s * d2[0], s * d2[1], s * d2[2]];
    let big = (0..3).map(|i| p[i].abs() + w[i].abs()).fold(1.0, f64::max);
    let quantum = 2f64.powi(big.log2().ceil() as i32 + 1 - 52);
    let wq: Vec<f64> = w.iter().map(|x| (x / quantum).round() * quantum).collect();
    let mut zeta = [Complex64::default(); 3];
    let mut eta = [Complex64::default(); 3];
    for i in 0..3 {
        zeta[i] = Complex64::new(-p[i] + wq[i], t * d1[i]);
        eta[i] = Complex64::new(-p[i] - wq[i], -(t * d1[i]));
    }
    Ok((ComplexFrequency::new(zeta, kappa)?, ComplexFrequency::new(eta, kappa)?))
}

/// `t_0 = 2 k^2 (R' / pi) M_em C_m`
pub fn t_zero(c_m: f64, kappa: f64, r_prime: f64, m_em: f64) -> Result<f64> {
    if !(c_m > 0.0 && kappa > 0.0 && r_prime > 0.0 && m_em > 0.0) {
        return invalid("t_zero needs positive arguments");
    }
    Ok(2.0 * kappa * kappa * (r_prime / PI) * m_em * c_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GosConfig {
    pub grid_size: usize,
    /// half side of the periodic cube
    pub r_prime: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for GosConfig {
    fn default() -> Self {
        GosConfig { grid_size: 32, r_prime: 2.4 * PI, tolerance: 1e-12, max_iterations: 400, restart: 60 }
    }
}

impl GosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 8 || self.grid_size % 2 != 0 {
            return invalid("GOS grid size must be even and at least 8");
        }
        if !(self.r_prime > PI) {
            return invalid("R' must exceed pi");
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return invalid("GOS tolerance must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.r_prime / self.grid_size as f64
    }
}

/// Recorded norms over the ball of radius `R'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GosNorms {
    pub v_l2: f64,
    /// `ln |u|_{L^2(B_R')}` (the norm itself may overflow)
    pub ln_u_l2: f64,
}

#[derive(Debug, Clone)]
pub struct GosSolution {
    pub freq: ComplexFrequency,
    /// rows: local axes `d1 = Im zeta / t`, `d2`, `d3`
    pub frame: [[f64; 3]; 3],
    pub config: GosConfig,
    /// remainder on the local grid, row-major
    pub v: Vec<Complex64>,
    /// `|Delta u + k^2 u - k^2 f u| / |k^2 u|` in discrete `L^2(B_R')`
    pub residual: f64,
    pub norms: GosNorms,
    pub iterations: usize,
    /// grid maximum of `|f|`
    pub f_sup: f64,
}

/// Frame shared by `zeta` and `-conj`-type partners: `d1 = +-Im zeta / t` with a fixed sign rule.
pub fn gos_frame(freq: &ComplexFrequency) -> [[f64; 3]; 3] {
    let im = freq.imag_part();
    let mut d1 = if freq.t > 0.0 { normalized(im) } else { [1.0, 0.0, 0.0] };
    if let Some(c) = d1.iter().find(|c| c.abs() > 1e-12) {
        if *c < 0.0 {
            d1 = [-d1[0], -d1[1], -d1[2]];
        }
    }
    let d2 = normalized(cross(d1, first_nonparallel_axis(d1)));
    let d3 = cross(d1, d2);
    [d1, d2, d3]
}

struct Local {
    m: usize,
    h: f64,
    r_prime: f64,
    /// `exp(i pi y1 / (2R'))` per first-axis index
    shift: Vec<Complex64>,
    symbol: Vec<Complex64>,
    fft: Fft3,
}

impl Local {
    fn new(cfg: &GosConfig, zeta_loc: &C3) -> Self {
        let m = cfg.grid_size;
        let h = cfg.spacing();
        let r = cfg.r_prime;
        let shift = (0..m).map(|j| Complex64::from_polar(1.0, PI * (-r + j as f64 * h) / (2.0 * r))).collect();
        let w = PI / r;
        let mut symbol = Vec::with_capacity(m * m * m);
        for a in 0..m {
            let x1 = w * (signed_freq(a, m) as f64 + 0.5);
            for b in 0..m {
                let x2 = w * signed_freq(b, m) as f64;
                for c in 0..m {
                    let x3 = w * signed_freq(c, m) as f64;
                    let xx = x1 * x1 + x2 * x2 + x3 * x3;
                    let zx = zeta_loc[0] * x1 + zeta_loc[1] * x2 + zeta_loc[2] * x3;
                    symbol.push(-(zx * 2.0 + xx));
                }
            }
        }
        Local { m, h, r_prime: r, shift, symbol, fft: Fft3::new(m) }
    }

    fn coord(&self, j: usize) -> f64 {
        -self.r_prime + j as f64 * self.h
    }

    fn multiplier(&self, g: &[Complex64], inverse: bool) -> Vec<Complex64> {
        let m = self.m;
        let mut buf: Vec<Complex64> = g.iter().enumerate().map(|(i, v)| v * self.shift[i / (m * m)].conj()).collect();
        self.fft.forward(&mut buf);
        let s = 1.0 / (m * m * m) as f64;
        for (b, sym) in buf.iter_mut().zip(&self.symbol) {
            *b = if inverse { *b * s / sym } else { *b * s * sym };
        }
        self.fft.inverse(&mut buf);
        for (i, b) in buf.iter_mut().enumerate() {
            *b *= self.shift[i / (m * m)];
        }
        buf
    }

    /// Indices and first local coordinates of the grid points in the ball of radius `rad`.
    fn ball(&self, rad: f64) -> Vec<(usize, f64)> {
        let m = self.m;
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let y = [self.coord(a), self.coord(b), self.coord(c)];
                    if dot(y, y) <= rad * rad {
                        out.push(((a * m + b) * m + c, y[0]));
                    }
                }
            }
        }
        out
    }
}

/// Physical coordinates of every local grid point.
fn physical_points(cfg: &GosConfig, frame: &[[f64; 3]; 3]) -> Vec<[f64; 3]> {
    let m = cfg.grid_size;
    let h = cfg.spacing();
    let mut pts = Vec::with_capacity(m * m * m);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let y = [-cfg.r_prime + a as f64 * h, -cfg.r_prime + b as f64 * h, -cfg.r_prime + c as f64 * h];
                let mut x = [0.0; 3];
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = y[0] * frame[0][k] + y[1] * frame[1][k] + y[2] * frame[2][k];
                }
                pts.push(x);
            }
        }
    }
    pts
}

/// Contrast on the local grid, extended by zero outside the ball of radius pi.
pub fn sample_on_frame(f: &ContrastField, cfg: &GosConfig, frame: &[[f64; 3]; 3]) -> Vec<Complex64> {
    let pts = physical_points(cfg, frame);
    let inside: Vec<usize> = (0..pts.len()).filter(|&i| dot(pts[i], pts[i]) <= PI * PI).collect();
    let sel: Vec<[f64; 3]> = inside.iter().map(|&i| pts[i]).collect();
    let vals = f.eval_points(&sel);
    let mut out = vec![Complex64::default(); pts.len()];
    for (&i, v) in inside.iter().zip(vals) {
        out[i] = v;
    }
    out
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.filter(|x| x.is_finite()).collect();
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Admissibility threshold `2 k^2 (R'/pi) |f|_inf`.
pub fn admissible_t(kappa: f64, r_prime: f64, f_sup: f64) -> f64 {
    2.0 * kappa * kappa * (r_prime / PI) * f_sup
}

/// Solves for the remainder `v` in the frame of [`gos_frame`].
pub fn solve_gos(f: &ContrastField, freq: &ComplexFrequency, cfg: &GosConfig) -> Result<GosSolution> {
    solve_gos_in_frame(f, freq, cfg, gos_frame(freq))
}

/// Solves for `v` on a given frame whose first axis is parallel to `Im zeta`.
pub fn solve_gos_in_frame(
    f: &ContrastField,
    freq: &ComplexFrequency,
    cfg: &GosConfig,
    frame: [[f64; 3]; 3],
) -> Result<GosSolution> {
    cfg.validate()?;
    if !(freq.t > 0.0) {
        return invalid("geometrical optics solutions need |Im zeta| > 0");
    }
    let im = freq.imag_part();
    let along = dot(im, frame[0]);
    if (along.abs() - freq.t).abs() > 1e-12 * freq.t {
        return invalid("the first frame axis must be parallel to Im zeta");
    }
    let zeta_loc: C3 = [0, 1, 2].map(|k| {
        freq.zeta[0] * frame[k][0] + freq.zeta[1] * frame[k][1] + freq.zeta[2] * frame[k][2]
    });
    // sign of the exponential weight along the first axis
    let tsign = along.signum() * freq.t;

    let fs = sample_on_frame(f, cfg, &frame);
    let f_sup = fs.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let t_adm = admissible_t(freq.kappa, cfg.r_prime, f_sup);
    if freq.t < t_adm {
        return invalid(format!("t = {} is below the admissible value {t_adm}", freq.t));
    }
    let local = Local::new(cfg, &zeta_loc);
    let k2 = freq.kappa * freq.kappa;
    let n = fs.len();

    let (v, iterations) = if f_sup == 0.0 {
        (vec![Complex64::default(); n], 0)
    } else {
        let src: Vec<Complex64> = fs.iter().map(|x| x * k2).collect();
        let b = local.multiplier(&src, true);
        let mut x = b.clone();
        let opts = GmresOptions { tol: cfg.tolerance, max_iter: cfg.max_iterations, restart: cfg.restart };
        let out = gmres(
            |u, o| {
                let q: Vec<Complex64> = u.iter().zip(&fs).map(|(a, b)| a * b * k2).collect();
                let g = local.multiplier(&q, true);
                for ((oi, ui), gi) in o.iter_mut().zip(u).zip(&g) {
                    *oi = ui - gi;
                }
            },
            &b,
            &mut x,
            opts,
        );
        if !out.converged {
            let min_symbol = local.symbol.iter().fold(f64::INFINITY, |m, s| m.min(s.norm()));
            return Err(Error::Numerical(format!(
                "GOS iteration stalled at residual {:.3e} after {} steps (min |symbol| = {min_symbol:.3e})",
                out.residual, out.iterations
            )));
        }
        (x, out.iterations)
    };

    let ball = local.ball(cfg.r_prime);
    let residual = pde_residual(&local, &v, &fs, k2, tsign, &ball);
    let h3 = local.h.powi(3);
    let norms = GosNorms {
        v_l2: (h3 * ball.iter().map(|&(i, _)| v[i].norm_sqr()).sum::<f64>()).sqrt(),
        ln_u_l2: 0.5
            * (h3.ln()
                + log_sum_exp(ball.iter().map(|&(i, y1)| -2.0 * tsign * y1 + (Complex64::new(1.0, 0.0) + v[i]).norm_sqr().ln()))),
    };
    Ok(GosSolution { freq: *freq, frame, config: *cfg, v, residual, norms, iterations, f_sup })
}

fn pde_residual(local: &Local, v: &[Complex64], fs: &[Complex64], k2: f64, tsign: f64, ball: &[(usize, f64)]) -> f64 {
    let lv = local.multiplier(v, false);
    let ymax = ball.iter().fold(f64::NEG_INFINITY, |m, &(_, y)| m.max(-tsign * y));
    let mut num = 0.0;
    let mut den = 0.0;
    for &(i, y1) in ball {
        let w = (-2.0 * tsign * y1 - 2.0 * ymax).exp();
        let u = v[i] + 1.0;
        num += w * (lv[i] - fs[i] * u * k2).norm_sqr();
        den += w * (u * k2).norm_sqr();
    }
    (num / den).sqrt()
}

impl GosSolution {
    /// Recomputes the norms from `v`.
    pub fn recompute_norms(&self) -> GosNorms {
        let local = Local::new(&self.config, &[Complex64::default(); 3]);
        let ball = local.ball(self.config.r_prime);
        let h3 = local.h.powi(3);
        let tsign = dot(self.freq.imag_part(), self.frame[0]).signum() * self.freq.t;
        GosNorms {
            v_l2: (h3 * ball.iter().map(|&(i, _)| self.v[i].norm_sqr()).sum::<f64>()).sqrt(),
            ln_u_l2: 0.5
                * (h3.ln()
                    + log_sum_exp(
                        ball.iter().map(|&(i, y1)| -2.0 * tsign * y1 + (Complex64::new(1.0, 0.0) + self.v[i]).norm_sqr().ln()),
                    )),
        }
    }

    /// Residual of `Delta u + k^2 u - k^2 f u` recomputed spectrally for a given contrast.
    pub fn check_residual(&self, f: &ContrastField) -> f64 {
        let zeta_loc: C3 = [0, 1, 2].map(|k| {
            self.freq.zeta[0] * self.frame[k][0] + self.freq.zeta[1] * self.frame[k][1] + self.freq.zeta[2] * self.frame[k][2]
        });
        let local = Local::new(&self.config, &zeta_loc);
        let fs = sample_on_frame(f, &self.config, &self.frame);
        let tsign = dot(self.freq.imag_part(), self.frame[0]).signum() * self.freq.t;
        let ball = local.ball(self.config.r_prime);
        pde_residual(&local, &self.v, &fs, self.freq.kappa * self.freq.kappa, tsign, &ball)
    }

    pub fn u_l2(&self) -> f64 {
        self.norms.ln_u_l2.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GosBoundRow {
    pub t: f64,
    pub v_l2: f64,
    /// `t |v| / |f|_inf`
    pub ratio: f64,
    /// `|u| exp(-R' t)`
    pub u_scaled: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GosBoundsReport {
    pub per_t: Vec<GosBoundRow>,
    /// smallest constant satisfying all three estimates on the sweep
    pub c2_fit: f64,
    /// `max_t t |v| / |f|_inf`
    pub c2_decay: f64,
    /// log-log slope of the ratio over the whole sweep and over its upper half
    pub slope: f64,
    pub slope_top_half: f64,
    pub f_sup: f64,
    pub t_admissible: f64,
    /// bound on `|v|` obtained by inserting `t = t_admissible` into the decay estimate
    pub v_bound_at_admissible: f64,
}

/// Solves at each `t` with `zeta` from [`zeta_eta`] and collects the norm ratios.
pub fn verify_gos_bounds(
    f: &ContrastField,
    gamma: [i64; 3],
    t_list: &[f64],
    kappa: f64,
    cfg: &GosConfig,
) -> Result<GosBoundsReport> {
    if t_list.is_empty() {
        return invalid("empty t list");
    }
    let mut rows = Vec::new();
    let mut f_sup = 0.0;
    for &t in t_list {
        let (zeta, _) = zeta_eta(gamma, t, kappa)?;
        let sol = solve_gos(f, &zeta, cfg)?;
        f_sup = sol.f_sup;
        let ratio = if f_sup > 0.0 { t * sol.norms.v_l2 / f_sup } else { 0.0 };
        let u_scaled = if f_sup > 0.0 { (sol.norms.ln_u_l2 - cfg.r_prime * t).exp() } else { 0.0 };
        rows.push(GosBoundRow { t, v_l2: sol.norms.v_l2, ratio, u_scaled, residual: sol.residual, iterations: sol.iterations });
    }
    let c2_decay = rows.iter().fold(0.0f64, |m, r| m.max(r.ratio));
    let c2_fit = rows.iter().fold(c2_decay, |m, r| m.max(r.v_l2).max(r.u_scaled));
    let slope_of = |rs: &[GosBoundRow]| {
        if rs.len() < 2 || rs.iter().any(|r| r.ratio <= 0.0) {
            return 0.0;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = rs.iter().map(|r| (r.t, r.ratio)).unzip();
        crate::spectral::loglog_slope(&x, &y)
    };
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let t_admissible = admissible_t(kappa, cfg.r_prime, f_sup);
    let v_bound_at_admissible = if t_admissible > 0.0 { c2_decay * f_sup / t_admissible } else { 0.0 };
    Ok(GosBoundsReport {
        slope: slope_of(&sorted),
        slope_top_half: slope_of(&sorted[sorted.len() / 2..]),
        per_t: rows,
        c2_fit,
        c2_decay,
        f_sup,
        t_admissible,
        v_bound_at_admissible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearReport {
    pub lhs: f64,
    /// `ln(|w1 - w2| |u1| |u2|)`
    pub ln_rhs_over_c1: f64,
    /// `ln(lhs / (|w1 - w2| |u1| |u2|))`, the smallest admissible `ln c1` for this case
    pub ln_c1_case: f64,
}

/// Evaluates `|int_{B_pi} (f1 - f2) u1 u2|` against `|w1 - w2| |u1| |u2|`.
pub fn lemma31_check(
    f1: &ContrastField,
    f2: &ContrastField,
    u1: &GosSolution,
    u2: &GosSolution,
    w_diff_norm: f64,
    residual_tol: f64,
) -> Result<BilinearReport> {
    if u1.frame != u2.frame || u1.config != u2.config {
        return invalid("both solutions must live on the same local grid");
    }
    for (u, f) in [(u1, f1), (u2, f2)] {
        let r = u.check_residual(f);
        if r > residual_tol {
            return Err(Error::Numerical(format!("GOS residual {r:.3e} exceeds {residual_tol:.1e}")));
        }
    }
    let cfg = &u1.config;
    let diff = f1.sub(f2)?;
    let ds = sample_on_frame(&diff, cfg, &u1.frame);
    let pts = physical_points(cfg, &u1.frame);
    let zsum: C3 = [0, 1, 2].map(|k| u1.freq.zeta[k] + u2.freq.zeta[k]);
    let h3 = cfg.spacing().powi(3);
    let mut acc = Complex64::default();
    for (i, x) in pts.iter().enumerate() {
        if ds[i] == Complex64::default() {
            continue;
        }
        let phase = (Complex64::new(0.0, 1.0) * (zsum[0] * x[0] + zsum[1] * x[1] + zsum[2] * x[2])).exp();
        acc += ds[i] * phase * (u1.v[i] + 1.0) * (u2.v[i] + 1.0);
    }
    let lhs = acc.norm() * h3;
    let ln_rhs_over_c1 = w_diff_norm.ln() + u1.norms.ln_u_l2 + u2.norms.ln_u_l2;
    let ln_c1_case = if lhs == 0.0 { f64::NEG_INFINITY } else { lhs.ln() - ln_rhs_over_c1 };
    Ok(BilinearReport { lhs, ln_rhs_over_c1, ln_c1_case })
}

/// Fixed quantities entering the low-frequency coefficient estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffEstimateSetup {
    pub kappa: f64,
    pub r_prime: f64,
    pub m: f64,
    /// bound on the `H^m` norms of the contrasts
    pub c_m: f64,
    /// embedding constant for `m`
    pub m_em: f64,
}

impl CoeffEstimateSetup {
    pub fn t0(&self) -> Result<f64> {
        t_zero(self.c_m, self.kappa, self.r_prime, self.m_em)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowFreqCase {
    pub gamma: [i64; 3],
    pub t: f64,
    /// `|f1^(g) - f2^(g)|`
    pub lhs: f64,
    /// `ln(exp(4 R' t) |w1 - w2| + |f1 - f2|_{H^m} / t)`
    pub ln_shape: f64,
    /// `ln` of the bound with the supplied constant
    pub ln_bound: f64,
    pub holds: bool,
}

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `|f1^(g) - f2^(g)| <= c3 exp(4 R' t) |w1 - w2| + (c3 / t) |f1 - f2|_{H^m}`, evaluated in
/// logarithmic form with the constant passed as `ln_c3`.
pub fn low_freq_coeff_estimate(
    f1: &ContrastField,
    f2: &ContrastField,
    gamma: [i64; 3],
    t: f64,
    w_diff_norm: f64,
    ln_c3: f64,
    setup: &CoeffEstimateSetup,
) -> Result<LowFreqCase> {
    let t0 = setup.t0()?;
    if t < t0 * (1.0 - 1e-12) {
        return invalid(format!("t = {t} is below t0 = {t0}"));
    }
    let gn = ((gamma[0] * gamma[0] + gamma[1] * gamma[1] + gamma[2] * gamma[2]) as f64).sqrt();
    if gn > 2.0 * (setup.kappa * setup.kappa + t * t).sqrt() {
        return invalid(format!("|gamma| = {gn} exceeds 2 sqrt(k^2 + t^2)"));
    }
    let lhs = (f1.coeff(gamma) - f2.coeff(gamma)).norm();
    let dnorm = sobolev_norm(&f1.sub(f2)?, setup.m);
    let first = if w_diff_norm > 0.0 { 4.0 * setup.r_prime * t + w_diff_norm.ln() } else { f64::NEG_INFINITY };
    let second = if dnorm > 0.0 { dnorm.ln() - t.ln() } else { f64::NEG_INFINITY };
    let ln_shape = ln_add(first, second);
    let ln_bound = ln_c3 + ln_shape;
    let holds = lhs == 0.0 || lhs.ln() <= ln_bound;
    Ok(LowFreqCase { gamma, t, lhs, ln_shape, ln_bound, holds })
}

/// Calibration summary for an empirically fitted constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub constant_name: String,
    pub fitted_value: f64,
    pub ln_fitted_value: f64,
    pub n_cases: usize,
    pub max_ratio_case: String,
}

/// One contrast pair for the coefficient estimate.
pub struct CoeffPair<'a> {
    pub f1: &'a ContrastField,
    pub f2: &'a ContrastField,
    pub w_diff_norm: f64,
}

/// Smallest `c3` making the coefficient estimate hold on every pair, lattice vector and `t`
/// (pairs of `(gamma, t)` violating the constraints are skipped).
pub fn calibrate_c3(
    pairs: &[CoeffPair<'_>],
    gammas: &[[i64; 3]],
    ts: &[f64],
    setup: &CoeffEstimateSetup,
) -> Result<ConstantReport> {
    let mut best = f64::NEG_INFINITY;
    let mut worst = String::new();
    let mut n = 0;
    for (p, pair) in pairs.iter().enumerate() {
        for &g in gammas {
            for &t in ts {
                let c = match low_freq_coeff_estimate(pair.f1, pair.f2, g, t, pair.w_diff_norm, 0.0, setup) {
                    Ok(c) => c,
                    Err(Error::InvalidArgument(_)) => continue,
                    Err(e) => return Err(e),
                };
                n += 1;
                if c.lhs > 0.0 {
                    let r = c.lhs.ln() - c.ln_shape;
                    if r > best {
                        best = r;
                        worst = format!("pair {p}, gamma {:?}, t {t}", g);
                    }
                }
            }
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::EmptyActiveSet);
    }
    Ok(ConstantReport {
        constant_name: "c3".into(),
        fitted_value: best.exp(),
        ln_fitted_value: best,
        n_cases: n,
        max_ratio_case: worst,
    })
}
