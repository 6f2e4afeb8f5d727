//! Run configuration: one TOML tree whose sections map onto the library configurations.
//!
//! Every field has a default; optional fields that depend on other values (`mu`, the `t` range)
//! are resolved before a run starts so the manifest records the values actually used.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::forward::SolverConfig;
use crate::gos::GosConfig;
use crate::regularization::{mu_exponent, Method};
use crate::spectral::SobolevParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Near,
    Far,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub kappa: f64,
    /// radius `R` of the measurement sphere
    pub radius: f64,
    pub n_sources: usize,
    pub n_dirs: usize,
    /// contrast lattice `|g|_inf <= max_degree`
    pub max_degree: usize,
    pub m: f64,
    pub s: f64,
    pub beta: f64,
    pub theta: f64,
    pub kind: Kind,
    /// `ball` or `zero`; ignored when `contrast` is set
    pub phantom: String,
    /// contrast file written by `save_field`
    pub contrast: Option<PathBuf>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            kappa: 1.0,
            radius: 1.2 * PI,
            n_sources: 18,
            n_dirs: 18,
            max_degree: 4,
            m: 2.0,
            s: 4.0,
            beta: 0.5,
            theta: 0.9,
            kind: Kind::Near,
            phantom: "ball".into(),
            contrast: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GosSection {
    pub solver: GosConfig,
    pub gamma: [i64; 3],
    /// defaults to 1.05 times the admissibility threshold
    pub t_min: Option<f64>,
    /// defaults to `10 t_min`
    pub t_max: Option<f64>,
    pub n_t: usize,
    /// lattice vectors with `|g|_inf <= gamma_max` enter the coefficient estimate
    pub gamma_max: i64,
    /// calibration and held-out pairs for the coefficient estimate
    pub n_pairs: usize,
    pub n_holdout: usize,
    /// multiples of `t0` at which the coefficient estimate is evaluated
    pub t_factors: Vec<f64>,
    pub seed: u64,
}

impl Default for GosSection {
    fn default() -> Self {
        GosSection {
            solver: GosConfig::default(),
            gamma: [1, 0, 0],
            t_min: None,
            t_max: None,
            n_t: 6,
            gamma_max: 2,
            n_pairs: 20,
            n_holdout: 50,
            t_factors: vec![1.0, 1.5, 2.0, 3.0, 5.0],
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TikhonovSection {
    pub method: Method,
    pub max_iter: usize,
    pub tol: f64,
    /// constant of the index function (`A` near field, `B` far field)
    pub a: Option<f64>,
    /// defaults to `min(1, (s - m)/(m + 3/2))`
    pub mu: Option<f64>,
    /// noise level of a single `tikhonov` run
    pub delta: f64,
    pub deltas: Vec<f64>,
    pub seed: u64,
}

impl Default for TikhonovSection {
    fn default() -> Self {
        TikhonovSection {
            method: Method::GaussNewton,
            max_iter: 40,
            tol: 1e-6,
            a: None,
            mu: None,
            delta: 1e-2,
            deltas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VscSection {
    pub n_calibration: usize,
    pub n_holdout: usize,
    /// held-out cases are checked with `safety * A_min`
    pub safety: f64,
    pub seed: u64,
}

impl Default for VscSection {
    fn default() -> Self {
        VscSection { n_calibration: 60, n_holdout: 50, safety: 1.05, seed: 2024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NearFarSection {
    /// independent perturbation directions
    pub n_directions: usize,
    /// amplitudes `eps_max * ratio^k`, `k < n_levels`
    pub n_levels: usize,
    pub eps_max: f64,
    pub ratio: f64,
    /// small-data threshold on the far-field distance
    pub delta_max: f64,
    pub seed: u64,
}

impl Default for NearFarSection {
    fn default() -> Self {
        NearFarSection { n_directions: 4, n_levels: 6, eps_max: 0.2, ratio: 0.4, delta_max: 10.0, seed: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub lambdas: Vec<f64>,
    pub rho_max: f64,
    pub n_rho: usize,
    pub n_pairs: usize,
    pub split_rhos: Vec<f64>,
    pub seed: u64,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection {
            lambdas: vec![-3.0, -2.0, 0.0, 1.0, 2.0],
            rho_max: 50.0,
            n_rho: 40,
            n_pairs: 100,
            split_rhos: vec![1.0, 2.0, 3.0, 4.0],
            seed: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemSection,
    pub solver: SolverConfig,
    pub gos: GosSection,
    pub tikhonov: TikhonovSection,
    pub vsc: VscSection,
    pub near_far: NearFarSection,
    pub audit: AuditSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).or_else(|e| invalid(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params_shape(&self) -> Result<SobolevParams> {
        SobolevParams::new(self.problem.m, self.problem.s, 1.0)
    }

    /// Checks every section and fills in the derived defaults.
    pub fn resolve(mut self) -> Result<Self> {
        let p = &self.problem;
        self.params_shape()?;
        if !(p.kappa > 0.0) {
            return invalid("kappa must be positive");
        }
        if !(p.radius > PI) {
            return invalid(format!("measurement radius {} must exceed pi", p.radius));
        }
        if !(p.beta > 0.0 && p.beta <= 1.0) {
            return invalid("beta must lie in (0, 1]");
        }
        if !(p.theta > 0.0 && p.theta < 1.0) {
            return invalid("theta must lie in (0, 1)");
        }
        if p.contrast.is_none() && !matches!(p.phantom.as_str(), "ball" | "zero") {
            return invalid(format!("unknown phantom '{}' (expected ball or zero)", p.phantom));
        }
        self.solver.validate()?;
        self.gos.solver.validate()?;
        if self.gos.n_t < 2 {
            return invalid("gos.n_t must be at least 2");
        }
        let t = &mut self.tikhonov;
        let mu = match t.mu {
            Some(mu) => mu,
            None => mu_exponent(self.problem.m, self.problem.s)?,
        };
        if !(mu > 0.0 && mu <= 1.0) {
            return invalid(format!("mu = {mu} must lie in (0, 1]"));
        }
        t.mu = Some(mu);
        if let Some(a) = t.a {
            if !(a > 0.0 && a.is_finite()) {
                return invalid("the index function constant must be positive");
            }
        }
        if t.deltas.is_empty() || t.deltas.iter().chain([&t.delta]).any(|d| !(*d > 0.0)) {
            return invalid("noise levels must be positive");
        }
        if !(self.vsc.safety >= 1.0) {
            return invalid("vsc.safety must be at least 1");
        }
        let nf = &self.near_far;
        if !(nf.eps_max > 0.0 && nf.ratio > 0.0 && nf.ratio < 1.0 && nf.delta_max > 0.0) {
            return invalid("near_far: need eps_max > 0, 0 < ratio < 1, delta_max > 0");
        }
        if nf.n_directions == 0 || nf.n_levels < 2 {
            return invalid("near_far: need at least one direction and two levels");
        }
        if !(self.audit.rho_max >= 1.0) || self.audit.n_rho < 2 {
            return invalid("audit: need rho_max >= 1 and n_rho >= 2");
        }
        Ok(self)
    }

    pub fn mu(&self) -> f64 {
        self.tikhonov.mu.expect("resolved config")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let c = Config::default().resolve().unwrap();
        let back = Config::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, back);
        assert!((c.mu() - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys_and_small_m() {
        assert!(Config::from_toml("[problem]\nkapa = 1.0\n").is_err());
        let c = Config::from_toml("[problem]\nm = 1.5\n").unwrap();
        let err = c.resolve().unwrap_err().to_string();
        assert!(err.contains("m > 3/2"), "{err}");
    }
}
