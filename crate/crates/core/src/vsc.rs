//! Variational source condition, stability estimates and the near-to-far inequality,
//! evaluated and calibrated on sampled contrasts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forward::{data_distance, ForwardOperator, ScatterData};
use crate::regularization::{psi_eval, PsiFunction, PsiVariant};
use crate::spectral::{hm_inner, sobolev_norm, ContrastField, SobolevParams};

/// Which branch of the case distinction a pair falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `|f_dagger - f|_{H^m} > 4 C_s`: holds without the index function
    Large,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VscCase {
    pub beta: f64,
    pub data_dist_sq: f64,
    /// `beta/2 |f_dagger - f|^2`
    pub lhs: f64,
    /// `1/2 |f|^2 - 1/2 |f_dagger|^2 + psi(data_dist_sq)`
    pub rhs: f64,
    /// `Re <f_dagger, f_dagger - f>`
    pub lhs_inner: f64,
    /// `(1 - beta)/2 |f_dagger - f|^2 + psi(data_dist_sq)`
    pub rhs_inner: f64,
    /// difference of the slacks `rhs - lhs` of both forms
    pub form_gap: f64,
    pub diff_hm: f64,
    pub branch: Branch,
    pub holds: bool,
}

impl VscCase {
    /// `Re <f_dagger, d> - (1 - beta)/2 |d|^2`, the part the index function has to cover.
    pub fn need(&self) -> f64 {
        self.lhs_inner - 0.5 * (1.0 - self.beta) * self.diff_hm * self.diff_hm
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return invalid(format!("beta = {beta} must lie in (0, 1]"));
    }
    Ok(())
}

/// Both forms of the inequality for a given squared data distance.
pub fn vsc_case_from_distance(
    f_dagger: &ContrastField,
    f: &ContrastField,
    psi: &PsiFunction,
    beta: f64,
    params: &SobolevParams,
    data_dist_sq: f64,
) -> Result<VscCase> {
    check_beta(beta)?;
    let m = params.m;
    let d = f_dagger.sub(f)?;
    let diff_hm = sobolev_norm(&d, m);
    let p = psi_eval(psi, data_dist_sq);
    // 1/2 |f|^2 - 1/2 |f_dagger|^2 = 1/2 Re <f - f_dagger, f + f_dagger>
    let penalty_diff = 0.5 * hm_inner(&f.sub(f_dagger)?, &f.add(f_dagger)?, m)?.re;
    let lhs = 0.5 * beta * diff_hm * diff_hm;
    let rhs = penalty_diff + p;
    let lhs_inner = hm_inner(f_dagger, &d, m)?.re;
    let rhs_inner = 0.5 * (1.0 - beta) * diff_hm * diff_hm + p;
    let branch = if diff_hm > 4.0 * params.c_s { Branch::Large } else { Branch::Small };
    Ok(VscCase {
        beta,
        data_dist_sq,
        lhs,
        rhs,
        lhs_inner,
        rhs_inner,
        form_gap: (rhs - lhs) - (rhs_inner - lhs_inner),
        diff_hm,
        branch,
        holds: lhs <= rhs,
    })
}

/// Squared data distance `|F(f) - F(f_dagger)|^2`.
pub fn data_dist_sq(op: &ForwardOperator, reference: &ScatterData, f: &ContrastField) -> Result<f64> {
    let d = data_distance(&op.evaluate(f)?, reference)?;
    Ok(d * d)
}

pub fn vsc_check(
    f_dagger: &ContrastField,
    f: &ContrastField,
    psi: &PsiFunction,
    beta: f64,
    params: &SobolevParams,
    op: &ForwardOperator,
) -> Result<VscCase> {
    for g in [f_dagger, f] {
        if !(g.flags().in_d && g.flags().supported_in_ball) {
            return invalid("contrasts must be admissible");
        }
    }
    let reference = op.evaluate(f_dagger)?;
    vsc_case_from_distance(f_dagger, f, psi, beta, params, data_dist_sq(op, &reference, f)?)
}

/// Squared data distances of every perturbation to `f_dagger`, computed in parallel.
pub fn perturbation_distances(op: &ForwardOperator, f_dagger: &ContrastField, perts: &[ContrastField]) -> Result<Vec<f64>> {
    let reference = op.evaluate(f_dagger)?;
    perts.par_iter().map(|f| data_dist_sq(op, &reference, f)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// index function with the fitted constant
    pub psi: PsiFunction,
    pub a_min: f64,
    pub n_cases: usize,
    pub n_active: usize,
    pub worst_case: usize,
    pub cases: Vec<VscCase>,
}

/// Smallest constant for which every case holds, from precomputed data distances.
pub fn calibrate_from_distances(
    f_dagger: &ContrastField,
    perts: &[ContrastField],
    dists: &[f64],
    psi_shape: &PsiFunction,
    beta: f64,
    params: &SobolevParams,
) -> Result<CalibrationReport> {
    if perts.len() != dists.len() {
        return Err(Error::DimensionMismatch { expected: perts.len(), got: dists.len() });
    }
    let unit = psi_shape.unit();
    let cases: Vec<VscCase> = perts
        .iter()
        .zip(dists)
        .map(|(f, &d)| vsc_case_from_distance(f_dagger, f, &unit, beta, params, d))
        .collect::<Result<_>>()?;
    let mut a_min = 0.0;
    let mut worst = None;
    let mut n_active = 0;
    for (i, c) in cases.iter().enumerate() {
        let need = c.need();
        if need <= 0.0 {
            continue;
        }
        let pu = psi_eval(&unit, c.data_dist_sq);
        if pu == 0.0 {
            return Err(Error::Numerical(format!("case {i} needs a positive constant at zero data distance")));
        }
        n_active += 1;
        let a = need / pu;
        if a > a_min {
            a_min = a;
            worst = Some(i);
        }
    }
    let worst_case = worst.ok_or(Error::EmptyActiveSet)?;
    let psi = psi_shape.with_constant(a_min);
    let cases = perts
        .iter()
        .zip(dists)
        .map(|(f, &d)| vsc_case_from_distance(f_dagger, f, &psi, beta, params, d))
        .collect::<Result<_>>()?;
    Ok(CalibrationReport { psi, a_min, n_cases: perts.len(), n_active, worst_case, cases })
}

pub fn calibrate_constant(
    f_dagger: &ContrastField,
    perts: &[ContrastField],
    psi_shape: &PsiFunction,
    beta: f64,
    params: &SobolevParams,
    op: &ForwardOperator,
) -> Result<CalibrationReport> {
    let dists = perturbation_distances(op, f_dagger, perts)?;
    calibrate_from_distances(f_dagger, perts, &dists, psi_shape, beta, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `|f1 - f2|_{H^m}`
    pub lhs: f64,
    /// `2 sqrt(C) (ln(3 + d^-2))^(-e/2)`
    pub rhs: f64,
    pub data_dist: f64,
    pub holds: bool,
}

pub fn stability_from_distance(f1: &ContrastField, f2: &ContrastField, psi: &PsiFunction, m: f64, data_dist: f64) -> Result<StabilityReport> {
    let lhs = sobolev_norm(&f1.sub(f2)?, m);
    let rhs = psi.stability_bound(data_dist);
    Ok(StabilityReport { lhs, rhs, data_dist, holds: lhs <= rhs })
}

pub fn stability_check(
    f1: &ContrastField,
    f2: &ContrastField,
    psi: &PsiFunction,
    m: f64,
    op: &ForwardOperator,
) -> Result<StabilityReport> {
    let d = data_distance(&op.evaluate(f1)?, &op.evaluate(f2)?)?;
    stability_from_distance(f1, f2, psi, m, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub delta: f64,
    pub t: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub tau: f64,
    /// `tau + s - m`
    pub exponent: f64,
    /// smallest `t` with `2t >= (12 R t)^(1/exponent)`
    pub t_bar: f64,
    /// noise level at which `t = t_bar`
    pub delta_max: f64,
    pub admissible: bool,
    /// `delta > delta_max`: the coarse bound applies instead
    pub coarse_regime: bool,
}

/// `12 R t = ln(3 + delta^-2) = rho^(tau + s - m)`, `epsilon = (12 R)^2`.
pub fn proof_parameter_trace(delta: f64, params: &SobolevParams, radius: f64, kappa: f64) -> Result<ProofTrace> {
    params.validate()?;
    if !(delta > 0.0 && radius > 0.0 && kappa > 0.0) {
        return invalid("delta, R and kappa must be positive");
    }
    let tau = params.tau();
    let p = tau + params.s - params.m;
    let l = (3.0 + delta.powi(-2)).ln();
    let t = l / (12.0 * radius);
    let rho = l.powf(1.0 / p);
    let t_bar = ((12.0 * radius).powf(1.0 / p) / 2.0).powf(p / (p - 1.0));
    let e = (12.0 * radius * t_bar).exp();
    let delta_max = if e > 3.0 { (e - 3.0).powf(-0.5) } else { f64::INFINITY };
    let admissible = 2.0 * (kappa * kappa + t * t).sqrt() > 2.0 * t && 2.0 * t >= rho && rho >= 1.0;
    Ok(ProofTrace {
        delta,
        t,
        rho,
        epsilon: (12.0 * radius).powi(2),
        tau,
        exponent: p,
        t_bar,
        delta_max,
        admissible,
        coarse_regime: delta > delta_max,
    })
}

/// Near-field and far-field distances of one contrast pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFarCase {
    pub near_norm_sq: f64,
    pub far_norm: f64,
}

pub fn near_far_distances(
    near_op: &ForwardOperator,
    far_op: &ForwardOperator,
    f1: &ContrastField,
    f2: &ContrastField,
) -> Result<NearFarCase> {
    let n = data_distance(&near_op.evaluate(f1)?, &near_op.evaluate(f2)?)?;
    let a = data_distance(&far_op.evaluate(f1)?, &far_op.evaluate(f2)?)?;
    Ok(NearFarCase { near_norm_sq: n * n, far_norm: a })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFarFit {
    pub omega: f64,
    pub rho: f64,
    pub theta: f64,
}

/// `rho^2 exp(-(-ln(a / (omega rho)))^theta)`; infinite once `a >= omega rho`.
pub fn near_far_bound(far_norm: f64, fit: &NearFarFit) -> f64 {
    if far_norm <= 0.0 {
        return 0.0;
    }
    let q = (fit.omega * fit.rho / far_norm).ln();
    if q <= 0.0 {
        return f64::INFINITY;
    }
    fit.rho * fit.rho * (-q.powf(fit.theta)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFarReport {
    pub near_norm_sq: f64,
    pub far_norm: f64,
    pub bound: f64,
    /// `ln(bound / near_norm_sq)`
    pub log_slack: f64,
    pub holds: bool,
}

pub fn near_to_far_check(case: &NearFarCase, fit: &NearFarFit, delta_max: f64) -> Result<NearFarReport> {
    if case.far_norm > delta_max {
        return invalid(format!("far-field distance {} exceeds the threshold {delta_max}", case.far_norm));
    }
    let bound = near_far_bound(case.far_norm, fit);
    Ok(NearFarReport {
        near_norm_sq: case.near_norm_sq,
        far_norm: case.far_norm,
        bound,
        log_slack: (bound / case.near_norm_sq).ln(),
        holds: case.near_norm_sq <= bound,
    })
}

fn holds_all(cases: &[NearFarCase], fit: &NearFarFit) -> bool {
    cases.iter().all(|c| c.near_norm_sq <= near_far_bound(c.far_norm, fit))
}

/// Fits `(omega, rho)` with `omega rho > delta_max`: for each `omega` on a logarithmic grid the
/// smallest such `rho` making every case hold is found by bisection, and the pair with the
/// smallest mean log slack is kept.
pub fn fit_near_to_far(cases: &[NearFarCase], theta: f64, delta_max: f64) -> Result<NearFarFit> {
    if !(theta > 0.0 && theta < 1.0) {
        return invalid("theta must lie in (0, 1)");
    }
    if cases.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    if let Some(c) = cases.iter().find(|c| c.far_norm > delta_max) {
        return invalid(format!("far-field distance {} exceeds the threshold {delta_max}", c.far_norm));
    }
    let active: Vec<NearFarCase> = cases.iter().copied().filter(|c| c.near_norm_sq > 0.0).collect();
    if active.is_empty() {
        return Ok(NearFarFit { omega: 1.0, rho: 1.0, theta });
    }
    let mut best: Option<(f64, NearFarFit)> = None;
    for k in 0..=120 {
        let omega = 10f64.powf(-6.0 + 12.0 * k as f64 / 120.0);
        // omega rho > delta_max keeps the bound finite for every admissible far-field distance
        let rho_min = delta_max / omega * (1.0 + 1e-9);
        let mut lo = rho_min;
        let mut hi = rho_min;
        while !holds_all(&active, &NearFarFit { omega, rho: hi, theta }) {
            lo = hi;
            hi *= 2.0;
            if hi > 1e30 {
                break;
            }
        }
        if hi > 1e30 {
            continue;
        }
        if hi > rho_min {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if holds_all(&active, &NearFarFit { omega, rho: mid, theta }) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        let fit = NearFarFit { omega, rho: hi, theta };
        let score: f64 = active.iter().map(|c| (near_far_bound(c.far_norm, &fit) / c.near_norm_sq).ln()).sum::<f64>()
            / active.len() as f64;
        if best.map_or(true, |(s, _)| score < s) {
            best = Some((score, fit));
        }
    }
    best.map(|(_, f)| f).ok_or_else(|| Error::Numerical("no (omega, rho) pair satisfies every case".into()))
}

/// Far-field index function `B (ln(3 + 1/t))^(-2 mu theta)` majorizing `psi_near(phi(t))` with
/// `phi(t) = rho^2 exp(-(-ln sqrt(t) + ln(omega rho))^theta)` on six decades below `t_max`.
pub fn psi_composition_far(psi_near: &PsiFunction, theta: f64, fit: &NearFarFit, t_max: f64) -> Result<PsiFunction> {
    let a = match psi_near.variant {
        PsiVariant::Near { a } => a,
        PsiVariant::Far { .. } => return invalid("expected a near-field index function"),
    };
    if !(theta > 0.0 && theta < 1.0) {
        return invalid("theta must lie in (0, 1)");
    }
    if !(t_max > 0.0 && t_max.sqrt() < fit.omega * fit.rho) {
        return invalid("threshold must satisfy sqrt(t_max) < omega rho");
    }
    let e = 2.0 * psi_near.mu * theta;
    let mut b = a * 2f64.powf(e);
    for k in 0..=600 {
        let t = t_max * 10f64.powf(-6.0 * k as f64 / 600.0);
        let phi = fit.rho * fit.rho * (-(fit.omega * fit.rho / t.sqrt()).ln().powf(theta)).exp();
        let ratio = psi_eval(psi_near, phi) / (3.0 + 1.0 / t).ln().powf(-e);
        if !ratio.is_finite() {
            return Err(Error::Numerical("composition bound diverged".into()));
        }
        b = b.max(ratio);
    }
    PsiFunction::far(b, theta, psi_near.mu)
}
