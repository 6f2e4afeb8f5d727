//! Standard desk-scale configuration, phantom and perturbation families shared by the command
//! line tool and the validation suite.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forward::{ForwardOperator, SolverConfig};
use crate::phantom::{nonnegative_mode, random_band_limited, smoothed_ball, windowed_mode};
use crate::spectral::{project_to_d, sobolev_norm, ContrastField, Lattice, SobolevParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub kappa: f64,
    /// measurement radius
    pub radius: f64,
    /// sources (and receivers) on the measurement sphere
    pub n_points: usize,
    /// incident (and observation) directions
    pub n_dirs: usize,
    pub max_degree: usize,
    pub m: f64,
    pub s: f64,
    pub beta: f64,
    pub theta: f64,
    pub solver: SolverConfig,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            kappa: 1.0,
            radius: 1.2 * PI,
            n_points: 18,
            n_dirs: 18,
            max_degree: 4,
            m: 2.0,
            s: 4.0,
            beta: 0.5,
            theta: 0.9,
            solver: SolverConfig::default(),
        }
    }
}

impl Setup {
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::minimal(self.max_degree)
    }

    pub fn near(&self) -> Result<ForwardOperator> {
        ForwardOperator::near(self.kappa, self.radius, self.n_points, &self.solver)
    }

    pub fn far(&self) -> Result<ForwardOperator> {
        ForwardOperator::far(self.kappa, self.n_dirs, &self.solver)
    }

    /// Sobolev parameters with `C_s = |f_dagger|_{H^s}`.
    pub fn params(&self, f_dagger: &ContrastField) -> Result<SobolevParams> {
        SobolevParams::new(self.m, self.s, sobolev_norm(f_dagger, self.s))
    }
}

/// Smoothed ball of contrast 0.4 with edge between `0.3 pi` and `0.8 pi`.
pub fn ball_phantom(lattice: Lattice) -> Result<ContrastField> {
    smoothed_ball(lattice, Complex64::new(0.4, 0.0), 0.3 * PI, 0.8 * PI)
}

/// Coefficients of `f` with `|g| > kmin`.
pub fn band_pass(f: &ContrastField, kmin: f64) -> ContrastField {
    let lat = *f.lattice();
    let coeffs = (0..lat.n_modes())
        .map(|i| {
            let g = lat.gamma(i);
            if ((g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) as f64).sqrt() > kmin {
                f.coeffs()[i]
            } else {
                Complex64::default()
            }
        })
        .collect();
    ContrastField::from_coeffs(lat, coeffs).expect("same lattice")
}

#[derive(Debug, Clone)]
pub struct Perturbed {
    pub label: String,
    pub field: ContrastField,
}

fn push(out: &mut Vec<Perturbed>, label: String, f: Result<ContrastField>) -> Result<()> {
    out.push(Perturbed { label, field: project_to_d(&f?) });
    Ok(())
}

fn random_gamma<R: Rng>(rng: &mut R, lo: i64, hi: i64) -> [i64; 3] {
    loop {
        let g = [rng.gen_range(-hi..=hi), rng.gen_range(-hi..=hi), rng.gen_range(-hi..=hi)];
        if g.iter().map(|c| c.abs()).max().unwrap_or(0) >= lo {
            return g;
        }
    }
}

/// Random perturbations of `f_dagger` (band-limited fields, windowed modes, rescaled phantoms
/// and large one-signed high-frequency modes), all projected onto the admissible set.
pub fn random_family(f_dagger: &ContrastField, n: usize, seed: u64) -> Result<Vec<Perturbed>> {
    let lat = *f_dagger.lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        match i % 10 {
            0..=4 => {
                let a = 10f64.powf(rng.gen_range(-3.0..-0.5));
                let s = rng.gen_range(1.0..3.0);
                let p = random_band_limited(lat, a, s, &mut rng)?;
                push(&mut out, format!("random a={a:.3e} s={s:.2}"), f_dagger.add(&p))?;
            }
            5 | 6 => {
                let g = random_gamma(&mut rng, 1, 4);
                let a = 10f64.powf(rng.gen_range(-2.5..-0.5));
                let ph = rng.gen_range(0.0..2.0 * PI);
                push(&mut out, format!("mode {g:?} a={a:.3e}"), windowed_mode(lat, g, a, ph).and_then(|p| f_dagger.add(&p)))?;
            }
            7 | 8 => {
                let c = rng.gen_range(-0.5..0.5);
                push(&mut out, format!("scale c={c:.3}"), Ok(f_dagger.scaled(1.0 - c)))?;
            }
            _ => {
                let g = random_gamma(&mut rng, 4, 4);
                let a = rng.gen_range(8.0..12.0);
                push(&mut out, format!("deep mode {g:?} a={a:.2}"), nonnegative_mode(lat, g, a).and_then(|p| f_dagger.sub(&p)))?;
            }
        }
    }
    Ok(out)
}

/// Calibration family: removed spectral bands of `f_dagger` at several strengths (the directions
/// the data see least), rescaled phantoms, and random perturbations filling up to `n` cases.
pub fn calibration_family(f_dagger: &ContrastField, n: usize, seed: u64) -> Result<Vec<Perturbed>> {
    let mut out = Vec::with_capacity(n);
    for k in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5] {
        for c in [0.25, 0.5, 1.0] {
            push(&mut out, format!("band k>{k} c={c}"), f_dagger.sub(&band_pass(f_dagger, k).scaled(c)))?;
        }
    }
    for c in [0.05, 0.3, 0.6, -0.3] {
        push(&mut out, format!("scale c={c}"), Ok(f_dagger.scaled(1.0 - c)))?;
    }
    if out.len() < n {
        out.extend(random_family(f_dagger, n - out.len(), seed)?);
    }
    out.truncate(n);
    Ok(out)
}

/// Small random perturbations `P(f_dagger + p)` with grid amplitude `10^U(-3, -1)`, for the
/// low-frequency coefficient estimate.
pub fn coefficient_pairs(f_dagger: &ContrastField, n: usize, seed: u64) -> Result<Vec<ContrastField>> {
    let lat = *f_dagger.lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = 10f64.powf(rng.gen_range(-3.0..-1.0));
            let s = rng.gen_range(1.0..3.0);
            Ok(project_to_d(&f_dagger.add(&random_band_limited(lat, a, s, &mut rng)?)?))
        })
        .collect()
}

/// Shrinking perturbations `P(f_dagger + eps_k p_j)`, `eps_k = eps_max ratio^k`, ordered by
/// direction `j` and then level `k`.
pub fn shrinking_family(
    f_dagger: &ContrastField,
    n_directions: usize,
    n_levels: usize,
    eps_max: f64,
    ratio: f64,
    seed: u64,
) -> Result<Vec<Perturbed>> {
    let lat = *f_dagger.lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_directions * n_levels);
    for j in 0..n_directions {
        let s = rng.gen_range(1.0..3.0);
        let p = random_band_limited(lat, 1.0, s, &mut rng)?;
        for k in 0..n_levels {
            let eps = eps_max * ratio.powi(k as i32);
            push(&mut out, format!("direction {j} eps={eps:.3e}"), f_dagger.lin_comb(1.0, &p, eps))?;
        }
    }
    Ok(out)
}

/// Windowed single-mode perturbations `P(f_dagger + a cos(g.x) w)` for the `n` lattice vectors
/// `g` (one per `+-g` pair) with `|g|_inf <= gamma_max` of largest Euclidean length. These are
/// the directions with the weakest data for their own coefficient.
pub fn mode_pairs(f_dagger: &ContrastField, gamma_max: i64, n: usize, amplitude: f64) -> Result<Vec<Perturbed>> {
    let lat = *f_dagger.lattice();
    let mut gs: Vec<[i64; 3]> = Vec::new();
    for a in -gamma_max..=gamma_max {
        for b in -gamma_max..=gamma_max {
            for c in -gamma_max..=gamma_max {
                let g = [a, b, c];
                if g != [0, 0, 0] && !gs.contains(&[-a, -b, -c]) {
                    gs.push(g);
                }
            }
        }
    }
    gs.sort_by_key(|g| std::cmp::Reverse(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]));
    let mut out = Vec::with_capacity(n);
    for g in gs.into_iter().take(n) {
        push(&mut out, format!("mode {g:?} a={amplitude}"), windowed_mode(lat, g, amplitude, 0.0).and_then(|p| f_dagger.add(&p)))?;
    }
    Ok(out)
}
