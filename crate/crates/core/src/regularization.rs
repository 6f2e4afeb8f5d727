//! Tikhonov regularization with an `H^m` penalty, logarithmic index functions and the
//! a-priori parameter rule.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{data_norm, ForwardOperator, Linearization, ScatterData};
use crate::spectral::{hm_inner, project_to_d, sobolev_norm, sobolev_weights, ContrastField};

/// `min{1, (s - m) / (m + 3/2)}`
pub fn mu_exponent(m: f64, s: f64) -> Result<f64> {
    if !(m > 1.5 && s > m) {
        return invalid(format!("need 3/2 < m < s, got m = {m}, s = {s}"));
    }
    Ok(((s - m) / (m + 1.5)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PsiVariant {
    Near { a: f64 },
    Far { b: f64, theta: f64 },
}

/// `C (ln(3 + 1/t))^(-e)` with `e = 2 mu` (near) or `e = 2 mu theta` (far).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiFunction {
    pub variant: PsiVariant,
    pub mu: f64,
}

impl PsiFunction {
    pub fn near(a: f64, mu: f64) -> Result<Self> {
        let p = PsiFunction { variant: PsiVariant::Near { a }, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn far(b: f64, theta: f64, mu: f64) -> Result<Self> {
        let p = PsiFunction { variant: PsiVariant::Far { b, theta }, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return invalid(format!("mu = {} must lie in (0, 1]", self.mu));
        }
        match self.variant {
            PsiVariant::Near { a } if !(a > 0.0 && a.is_finite()) => invalid("A must be positive"),
            PsiVariant::Far { b, .. } if !(b > 0.0 && b.is_finite()) => invalid("B must be positive"),
            PsiVariant::Far { theta, .. } if !(theta > 0.0 && theta < 1.0) => invalid("theta must lie in (0, 1)"),
            _ => Ok(()),
        }
    }

    pub fn constant(&self) -> f64 {
        match self.variant {
            PsiVariant::Near { a } => a,
            PsiVariant::Far { b, .. } => b,
        }
    }

    /// Exponent `e` of `(ln(3 + 1/t))^(-e)`.
    pub fn exponent(&self) -> f64 {
        match self.variant {
            PsiVariant::Near { .. } => 2.0 * self.mu,
            PsiVariant::Far { theta, .. } => 2.0 * self.mu * theta,
        }
    }

    pub fn with_constant(&self, c: f64) -> Self {
        let variant = match self.variant {
            PsiVariant::Near { .. } => PsiVariant::Near { a: c },
            PsiVariant::Far { theta, .. } => PsiVariant::Far { b: c, theta },
        };
        PsiFunction { variant, mu: self.mu }
    }

    /// Same shape with constant 1.
    pub fn unit(&self) -> Self {
        self.with_constant(1.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        psi_eval(self, t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        psi_derivative(self, t)
    }

    /// Error bound `4 sqrt(C) (ln(3 + delta^-2))^(-e/2)` for the a-priori rule.
    pub fn rate_bound(&self, delta: f64) -> f64 {
        4.0 * self.constant().sqrt() * rate_abscissa(self, delta)
    }

    /// Stability bound `2 sqrt(C) (ln(3 + d^-2))^(-e/2)` for a data distance `d`.
    pub fn stability_bound(&self, d: f64) -> f64 {
        if d == 0.0 {
            return 0.0;
        }
        2.0 * self.constant().sqrt() * rate_abscissa(self, d)
    }
}

/// `(ln(3 + delta^-2))^(-e/2)`
pub fn rate_abscissa(psi: &PsiFunction, delta: f64) -> f64 {
    (3.0 + delta.powi(-2)).ln().powf(-psi.exponent() / 2.0)
}

/// `psi(t)`, with the limit value 0 at `t = 0`.
pub fn psi_eval(psi: &PsiFunction, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    psi.constant() * (3.0 + 1.0 / t).ln().powf(-psi.exponent())
}

/// `psi'(t) = e C (ln(3 + 1/t))^(-e-1) / (3t^2 + t)` for `t > 0`.
pub fn psi_derivative(psi: &PsiFunction, t: f64) -> f64 {
    let e = psi.exponent();
    let l = (3.0 + 1.0 / t).ln();
    e * psi.constant() * l.powf(-e - 1.0) / (3.0 * t * t + t)
}

/// `alpha = 1 / (2 psi'(4 delta^2))`
pub fn alpha_rule(psi: &PsiFunction, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return invalid("noise level must be positive");
    }
    Ok(1.0 / (2.0 * psi_derivative(psi, 4.0 * delta * delta)))
}

/// Adds complex Gaussian noise rescaled to data norm exactly `delta`.
pub fn add_noise(data: &ScatterData, delta: f64, seed: u64) -> Result<ScatterData> {
    if !(delta >= 0.0) {
        return invalid("noise level must be nonnegative");
    }
    if delta == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = (0..data.values.len())
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let noise = data.with_values(raw)?;
    let scale = delta / data_norm(&noise);
    data.add(&noise.scaled(Complex64::new(scale, 0.0)))
}

/// A differentiable data model `f -> F(f)`.
pub trait DataModel: Sync {
    fn template(&self) -> ScatterData;
    fn evaluate(&self, f: &ContrastField) -> Result<ScatterData>;
    /// `F(f)` with the dense derivative `J` and the product quadrature weights.
    fn jacobian(&self, f: &ContrastField) -> Result<(ScatterData, DMatrix<Complex64>)>;
    /// `F(f)` and `2 J^H W r` for `r = F(f) - g`.
    fn misfit_gradient(&self, f: &ContrastField, g: &ScatterData) -> Result<(ScatterData, Vec<Complex64>)>;
}

impl DataModel for ForwardOperator {
    fn template(&self) -> ScatterData {
        ForwardOperator::template(self)
    }

    fn evaluate(&self, f: &ContrastField) -> Result<ScatterData> {
        ForwardOperator::evaluate(self, f)
    }

    fn jacobian(&self, f: &ContrastField) -> Result<(ScatterData, DMatrix<Complex64>)> {
        let lin = self.linearize(f)?;
        let j = lin.matrix();
        Ok((lin.data, j))
    }

    fn misfit_gradient(&self, f: &ContrastField, g: &ScatterData) -> Result<(ScatterData, Vec<Complex64>)> {
        let lin = self.linearize(f)?;
        let r = lin.data.sub(g)?;
        let grad = lin.adjoint(&r.values).into_iter().map(|v| v * 2.0).collect();
        Ok((lin.data, grad))
    }
}

/// Forward map frozen at its linearization: `f -> F(f0) + J (f - f0)`.
pub struct BornModel {
    lin: Linearization,
    base: ContrastField,
}

impl BornModel {
    pub fn new(op: &ForwardOperator, base: &ContrastField) -> Result<Self> {
        Ok(BornModel { lin: op.linearize(base)?, base: base.clone() })
    }

    pub fn linearization(&self) -> &Linearization {
        &self.lin
    }
}

impl DataModel for BornModel {
    fn template(&self) -> ScatterData {
        self.lin.data.clone()
    }

    fn evaluate(&self, f: &ContrastField) -> Result<ScatterData> {
        let h = f.sub(&self.base)?;
        let jh = self.lin.apply(h.coeffs());
        let vals = self.lin.data.values.iter().zip(jh).map(|(a, b)| a + b).collect();
        self.lin.data.with_values(vals)
    }

    fn jacobian(&self, f: &ContrastField) -> Result<(ScatterData, DMatrix<Complex64>)> {
        Ok((self.evaluate(f)?, self.lin.matrix()))
    }

    fn misfit_gradient(&self, f: &ContrastField, g: &ScatterData) -> Result<(ScatterData, Vec<Complex64>)> {
        let d = self.evaluate(f)?;
        let r = d.sub(g)?;
        Ok((d, self.lin.adjoint(&r.values).into_iter().map(|v| v * 2.0).collect()))
    }
}

/// `(1/alpha) |F(f) - g|^2 + 1/2 |f|_{H^m}^2` over the admissible set.
pub struct TikhonovProblem<'a> {
    pub model: &'a dyn DataModel,
    pub data: ScatterData,
    pub alpha: f64,
    pub penalty_m: f64,
    /// restrict iterates to the admissible set via [`project_to_d`]
    pub constrained: bool,
}

impl<'a> TikhonovProblem<'a> {
    pub fn new(model: &'a dyn DataModel, data: ScatterData, alpha: f64, penalty_m: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return invalid("alpha must be positive");
        }
        let t = model.template();
        if t.kind != data.kind || t.sources.len() != data.sources.len() || t.receivers.len() != data.receivers.len() {
            return invalid("data configuration does not match the forward operator");
        }
        data.validate()?;
        Ok(TikhonovProblem { model, data, alpha, penalty_m, constrained: true })
    }

    pub fn objective_from(&self, f: &ContrastField, fd: &ScatterData) -> Result<f64> {
        let r = fd.sub(&self.data)?;
        let n = data_norm(&r);
        Ok(n * n / self.alpha + 0.5 * sobolev_norm(f, self.penalty_m).powi(2))
    }

    pub fn objective(&self, f: &ContrastField) -> Result<f64> {
        self.objective_from(f, &self.model.evaluate(f)?)
    }

    /// Objective and its gradient in the `H^m` inner product.
    pub fn gradient(&self, f: &ContrastField) -> Result<(f64, ContrastField)> {
        let (fd, g) = self.model.misfit_gradient(f, &self.data)?;
        let w = sobolev_weights(f.lattice(), self.penalty_m);
        let coeffs = g.iter().zip(&w).zip(f.coeffs()).map(|((gi, wi), fi)| gi / (self.alpha * wi) + fi).collect();
        Ok((self.objective_from(f, &fd)?, ContrastField::from_coeffs(*f.lattice(), coeffs)?))
    }

    fn project(&self, f: &ContrastField) -> ContrastField {
        if self.constrained {
            project_to_d(f)
        } else {
            f.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ProjectedGradient,
    GaussNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TikhonovOptions {
    pub method: Method,
    pub max_iter: usize,
    /// relative stopping tolerance, see [`tikhonov_minimize`]
    pub tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for TikhonovOptions {
    fn default() -> Self {
        TikhonovOptions { method: Method::ProjectedGradient, max_iter: 500, tol: 1e-8, armijo: 1e-4, max_backtracks: 40 }
    }
}

impl TikhonovOptions {
    pub fn gauss_newton() -> Self {
        TikhonovOptions { method: Method::GaussNewton, max_iter: 40, tol: 1e-6, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub objective_history: Vec<f64>,
    /// projected gradient norm at the returned iterate (`H^m` norm for projected gradient,
    /// Euclidean norm of grid values for the constrained Gauss-Newton method)
    pub stationarity: f64,
    pub converged: bool,
    pub line_search_failed: bool,
    pub misfit: f64,
    /// admissibility flags held at every accepted iterate
    pub stayed_in_d: bool,
}

/// Approximate stationary point of the Tikhonov functional (global optimality is not certified).
///
/// Projected gradient stops when `|f - P(f - grad)|_{H^m} <= tol (1 + |f|_{H^m})`. Gauss-Newton
/// stops when the projected gradient is below `tol` times the penalty gradient, when an
/// iteration lowers the objective by less than `tol` relative, or when the step vanishes. With
/// constraints on the minimal grid the bound-constrained variant in grid values is used; other
/// lattices project the unconstrained step.
pub fn tikhonov_minimize(
    problem: &TikhonovProblem<'_>,
    f_init: &ContrastField,
    opts: &TikhonovOptions,
) -> Result<(ContrastField, Diagnostics)> {
    if problem.constrained && !f_init.flags().in_d {
        return invalid("initial contrast must be admissible");
    }
    match opts.method {
        Method::ProjectedGradient => projected_gradient(problem, f_init, opts),
        Method::GaussNewton if problem.constrained && f_init.lattice().grid_size == 2 * f_init.lattice().max_degree + 1 => {
            box_gauss_newton(problem, f_init, opts)
        }
        Method::GaussNewton => gauss_newton(problem, f_init, opts),
    }
}

fn hm_re(a: &ContrastField, b: &ContrastField, m: f64) -> f64 {
    hm_inner(a, b, m).map(|z| z.re).unwrap_or(0.0)
}

fn stationarity(problem: &TikhonovProblem<'_>, f: &ContrastField, g: &ContrastField) -> Result<f64> {
    let stepped = problem.project(&f.sub(g)?);
    Ok(sobolev_norm(&f.sub(&stepped)?, problem.penalty_m))
}

fn projected_gradient(
    problem: &TikhonovProblem<'_>,
    f_init: &ContrastField,
    opts: &TikhonovOptions,
) -> Result<(ContrastField, Diagnostics)> {
    let m = problem.penalty_m;
    let mut f = f_init.clone();
    let (mut obj, mut g) = problem.gradient(&f)?;
    let mut history = vec![obj];
    let mut step = 1.0;
    let mut stayed_in_d = f.flags().in_d;
    let mut converged = false;
    let mut failed = false;
    let mut iterations = 0;
    let mut stat = stationarity(problem, &f, &g)?;
    while iterations < opts.max_iter {
        if stat <= opts.tol * (1.0 + sobolev_norm(&f, m)) {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..opts.max_backtracks {
            let trial = problem.project(&f.lin_comb(1.0, &g, -s)?);
            let d = trial.sub(&f)?;
            let t_obj = problem.objective(&trial)?;
            if t_obj <= obj + opts.armijo * hm_re(&g, &d, m) && t_obj <= obj {
                accepted = Some((trial, t_obj));
                break;
            }
            s *= 0.5;
        }
        let Some((trial, t_obj)) = accepted else {
            failed = true;
            break;
        };
        iterations += 1;
        let (obj2, g2) = problem.gradient(&trial)?;
        debug_assert!((obj2 - t_obj).abs() <= 1e-8 * t_obj.abs().max(1.0));
        // Barzilai-Borwein step in the H^m metric
        let df = trial.sub(&f)?;
        let dg = g2.sub(&g)?;
        let curv = hm_re(&df, &dg, m);
        step = if curv > 0.0 { hm_re(&df, &df, m) / curv } else { (2.0 * s).min(1e6) };
        f = trial;
        g = g2;
        obj = obj2;
        history.push(obj);
        stayed_in_d &= !problem.constrained || f.flags().in_d;
        stat = stationarity(problem, &f, &g)?;
    }
    if !converged && !failed && stat <= opts.tol * (1.0 + sobolev_norm(&f, m)) {
        converged = true;
    }
    let misfit = data_norm(&problem.model.evaluate(&f)?.sub(&problem.data)?);
    Ok((
        f,
        Diagnostics { iterations, objective_history: history, stationarity: stat, converged, line_search_failed: failed, misfit, stayed_in_d },
    ))
}

/// Solves `((2/alpha) J^H W J + G) h = b` by the Woodbury identity.
fn gn_solve(j: &DMatrix<Complex64>, w: &[f64], gdiag: &[f64], alpha: f64, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let nd = j.nrows();
    let mut bm = j.clone();
    for (i, wi) in w.iter().enumerate() {
        let s = wi.sqrt();
        for c in 0..bm.ncols() {
            bm[(i, c)] *= s;
        }
    }
    let ginv_b: Vec<Complex64> = b.iter().zip(gdiag).map(|(x, g)| x / g).collect();
    // K = B G^-1 B^H
    let mut bg = bm.clone();
    for c in 0..bg.ncols() {
        let s = 1.0 / gdiag[c];
        for r in 0..nd {
            bg[(r, c)] *= s;
        }
    }
    let mut k = &bg * bm.adjoint();
    for i in 0..nd {
        k[(i, i)] += Complex64::new(alpha / 2.0, 0.0);
    }
    let chol = k.cholesky().ok_or_else(|| Error::Numerical("Gauss-Newton system is not positive definite".into()))?;
    let y = chol.solve(&(&bm * DVector::from_vec(ginv_b.clone())));
    let corr = bm.adjoint() * y;
    Ok(ginv_b.iter().zip(corr.iter()).zip(gdiag).map(|((a, c), g)| a - c / g).collect())
}

fn gauss_newton(
    problem: &TikhonovProblem<'_>,
    f_init: &ContrastField,
    opts: &TikhonovOptions,
) -> Result<(ContrastField, Diagnostics)> {
    let m = problem.penalty_m;
    let lattice = *f_init.lattice();
    let gdiag = sobolev_weights(&lattice, m);
    let mut f = f_init.clone();
    let mut history = Vec::new();
    let mut stayed_in_d = f.flags().in_d;
    let mut converged = false;
    let mut failed = false;
    let mut iterations = 0;
    loop {
        let (fd, j) = problem.model.jacobian(&f)?;
        let obj = problem.objective_from(&f, &fd)?;
        if history.is_empty() {
            history.push(obj);
        }
        if iterations >= opts.max_iter {
            break;
        }
        let r = fd.sub(&problem.data)?;
        let w = r.entry_weights();
        // b = -(2/alpha) J^H W r - G f
        let wr: Vec<Complex64> = r.values.iter().zip(&w).map(|(a, b)| a * *b).collect();
        let jhwr = j.adjoint() * DVector::from_vec(wr);
        let b: Vec<Complex64> =
            jhwr.iter().zip(f.coeffs()).zip(&gdiag).map(|((a, fc), g)| -a * (2.0 / problem.alpha) - fc * *g).collect();
        let h = gn_solve(&j, &w, &gdiag, problem.alpha, &b)?;
        let hfield = ContrastField::from_coeffs(lattice, h)?;
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = problem.project(&f.lin_comb(1.0, &hfield, s)?);
            let t_obj = problem.objective(&trial)?;
            if t_obj <= obj {
                accepted = Some((trial, t_obj));
                break;
            }
            s *= 0.5;
        }
        let Some((trial, t_obj)) = accepted else {
            failed = true;
            break;
        };
        let moved = sobolev_norm(&trial.sub(&f)?, m);
        iterations += 1;
        f = trial;
        history.push(t_obj);
        stayed_in_d &= !problem.constrained || f.flags().in_d;
        if moved <= opts.tol * (1.0 + sobolev_norm(&f, m)) || (obj - t_obj) <= 1e-14 * obj {
            converged = true;
            break;
        }
    }
    let (_, g) = problem.gradient(&f)?;
    let stat = stationarity(problem, &f, &g)?;
    let misfit = data_norm(&problem.model.evaluate(&f)?.sub(&problem.data)?);
    Ok((
        f,
        Diagnostics { iterations, objective_history: history, stationarity: stat, converged, line_search_failed: failed, misfit, stayed_in_d },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub delta: f64,
    pub alpha: f64,
    pub err_hm: f64,
    pub misfit: f64,
    pub iterations: usize,
    pub seed: u64,
}

/// Seed of the `i`-th sweep entry.
pub fn job_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// Noisy data, a-priori `alpha` and a Tikhonov reconstruction for every noise level.
pub fn rate_sweep(
    f_dagger: &ContrastField,
    psi: &PsiFunction,
    deltas: &[f64],
    model: &dyn DataModel,
    penalty_m: f64,
    seed: u64,
    opts: &TikhonovOptions,
) -> Result<Vec<ExperimentRecord>> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return invalid("noise levels must be positive");
    }
    let exact = model.evaluate(f_dagger)?;
    let f0 = ContrastField::zeros(*f_dagger.lattice());
    let mut recs: Vec<ExperimentRecord> = deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let s = job_seed(seed, i);
            let g = add_noise(&exact, delta, s)?;
            let alpha = alpha_rule(psi, delta)?;
            let problem = TikhonovProblem::new(model, g, alpha, penalty_m)?;
            let (f, diag) = tikhonov_minimize(&problem, &f0, opts)?;
            Ok(ExperimentRecord {
                delta,
                alpha,
                err_hm: sobolev_norm(&f.sub(f_dagger)?, penalty_m),
                misfit: diag.misfit,
                iterations: diag.iterations,
                seed: s,
            })
        })
        .collect::<Result<_>>()?;
    recs.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    Ok(recs)
}

/// Least-squares fit `err = c x` through the origin with `x = (ln(3 + delta^-2))^(-e/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// `1 - SS_res / sum y^2` (no intercept)
    pub r_squared: f64,
}

pub fn rate_fit(records: &[ExperimentRecord], psi: &PsiFunction) -> RateFit {
    let xs: Vec<f64> = records.iter().map(|r| rate_abscissa(psi, r.delta)).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.err_hm).collect();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x).powi(2)).sum();
    RateFit { slope, r_squared: if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 } }
}

/// Gauss-Newton with the admissibility constraints as bounds on grid values.
///
/// On the minimal grid the samples determine the coefficients, the support condition removes
/// the samples outside the ball and the remaining constraints are `Re u <= 1`, `Im u <= 0`.
/// Each step is a two-metric projected Newton step: variables at (or within `eps` of) a bound
/// whose gradient pushes outward are moved by a diagonally scaled gradient step, the others by
/// the Gauss-Newton step restricted to them; the trial point is clamped and an Armijo search is
/// run on the true objective.
fn box_gauss_newton(
    problem: &TikhonovProblem<'_>,
    f_init: &ContrastField,
    opts: &TikhonovOptions,
) -> Result<(ContrastField, Diagnostics)> {
    let lattice = *f_init.lattice();
    let inside: Vec<usize> = (0..lattice.n_grid())
        .filter(|&i| {
            let x = lattice.grid_point(i);
            x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < std::f64::consts::PI.powi(2)
        })
        .collect();
    let n = inside.len();
    let nc = lattice.n_modes();
    // analysis restricted to interior samples
    let mut a = DMatrix::<Complex64>::zeros(nc, n);
    for (k, &i) in inside.iter().enumerate() {
        let mut e = vec![Complex64::default(); lattice.n_grid()];
        e[i] = Complex64::new(1.0, 0.0);
        let col = crate::spectral::analyze(&e, lattice)?;
        for (r, c) in col.coeffs().iter().enumerate() {
            a[(r, k)] = *c;
        }
    }
    let gdiag = sobolev_weights(&lattice, problem.penalty_m);
    let mut ga = a.clone();
    for r in 0..nc {
        for c in 0..n {
            ga[(r, c)] *= gdiag[r];
        }
    }
    let m_pen = a.adjoint() * &ga;
    let upper: Vec<f64> = (0..2 * n).map(|k| if k < n { 1.0 } else { 0.0 }).collect();

    let to_field = |z: &[f64]| -> Result<ContrastField> {
        let u = DVector::from_iterator(n, (0..n).map(|k| Complex64::new(z[k], z[n + k])));
        ContrastField::from_coeffs(lattice, (&a * u).iter().copied().collect())
    };
    let samples = project_to_d(f_init).synthesize();
    let mut z: Vec<f64> = inside.iter().map(|&i| samples[i].re).chain(inside.iter().map(|&i| samples[i].im)).collect();
    for (zk, ub) in z.iter_mut().zip(&upper) {
        *zk = zk.min(*ub);
    }
    let mut f = to_field(&z)?;
    let mut history = Vec::new();
    let mut stayed_in_d = f.flags().in_d;
    let mut converged = false;
    let mut failed = false;
    let mut iterations = 0;
    let mut stat;
    loop {
        let (fd, j) = problem.model.jacobian(&f)?;
        let obj = problem.objective_from(&f, &fd)?;
        if history.is_empty() {
            history.push(obj);
        }
        let r = fd.sub(&problem.data)?;
        let w = r.entry_weights();
        let wr: Vec<Complex64> = r.values.iter().zip(&w).map(|(x, y)| x * *y).collect();
        let gc: DVector<Complex64> = (j.adjoint() * DVector::from_vec(wr)).map(|v| v * (2.0 / problem.alpha))
            + DVector::from_iterator(nc, f.coeffs().iter().zip(&gdiag).map(|(c, g)| c * *g));
        let gu = a.adjoint() * gc;
        let grad: Vec<f64> = gu.iter().map(|v| v.re).chain(gu.iter().map(|v| v.im)).collect();
        // projected gradient norm, relative to the penalty gradient (which the data gradient
        // balances at a minimizer)
        stat = z.iter().zip(&grad).zip(&upper).map(|((zk, gk), ub)| (zk - (zk - gk).min(*ub)).powi(2)).sum::<f64>().sqrt();
        let pen = DVector::from_iterator(nc, f.coeffs().iter().zip(&gdiag).map(|(c, g)| c * *g));
        let scale = (a.adjoint() * pen).norm();
        if stat <= opts.tol * scale || stat == 0.0 {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        let mut b = j.clone();
        for (i, wi) in w.iter().enumerate() {
            let sw = wi.sqrt();
            for c in 0..nc {
                b[(i, c)] *= sw;
            }
        }
        let ba = b * &a;
        let hc = ba.adjoint() * &ba * Complex64::new(2.0 / problem.alpha, 0.0) + &m_pen;
        let eps = stat.min(1e-3);
        let active: Vec<bool> = (0..2 * n).map(|k| z[k] >= upper[k] - eps && grad[k] < 0.0).collect();
        let free: Vec<usize> = (0..2 * n).filter(|&k| !active[k]).collect();
        let hr = |p: usize, q: usize| -> f64 {
            let (pi, pr) = (p % n, p < n);
            let (qi, qr) = (q % n, q < n);
            let h = hc[(pi, qi)];
            match (pr, qr) {
                (true, true) | (false, false) => h.re,
                (true, false) => -h.im,
                (false, true) => h.im,
            }
        };
        let nf = free.len();
        let hff = DMatrix::<f64>::from_fn(nf, nf, |p, q| hr(free[p], free[q]));
        let gf = DVector::from_iterator(nf, free.iter().map(|&k| -grad[k]));
        let chol = hff.cholesky().ok_or_else(|| Error::Numerical("Gauss-Newton Hessian is not positive definite".into()))?;
        let df = chol.solve(&gf);
        let mut d = vec![0.0; 2 * n];
        for (p, &k) in free.iter().enumerate() {
            d[k] = df[p];
        }
        for k in 0..2 * n {
            if active[k] {
                d[k] = -grad[k] / hr(k, k);
            }
        }
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let zt: Vec<f64> = z.iter().zip(&d).zip(&upper).map(|((zk, dk), ub)| (zk + s * dk).min(*ub)).collect();
            let trial = to_field(&zt)?;
            let t_obj = problem.objective(&trial)?;
            let lin: f64 = zt.iter().zip(&z).zip(&grad).map(|((a1, a0), g)| (a1 - a0) * g).sum();
            if t_obj <= obj + opts.armijo * lin && t_obj <= obj {
                accepted = Some((zt, trial, t_obj));
                break;
            }
            s *= 0.5;
        }
        let Some((zt, trial, t_obj)) = accepted else {
            failed = true;
            break;
        };
        iterations += 1;
        let moved = zt.iter().zip(&z).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let size = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        z = zt;
        f = trial;
        history.push(t_obj);
        stayed_in_d &= f.flags().in_d;
        if moved <= 1e-12 * (1.0 + size) || obj - t_obj <= opts.tol * obj.abs() {
            converged = true;
            break;
        }
    }
    let misfit = data_norm(&problem.model.evaluate(&f)?.sub(&problem.data)?);
    Ok((
        f,
        Diagnostics { iterations, objective_history: history, stationarity: stat, converged, line_search_failed: failed, misfit, stayed_in_d },
    ))
}
