use serde::{Deserialize, Serialize};

use super::field::ContrastField;
use super::lattice::SobolevParams;
use super::norms::{sobolev_norm, sobolev_weights};
use crate::error::{invalid, Error, Result};

/// `sum_{g in Z^3, |g| <= rho} (1 + |g|^2)^lambda` by direct enumeration.
pub fn lattice_sum(lambda: f64, rho: f64) -> f64 {
    if rho < 0.0 {
        return 0.0;
    }
    let r2 = rho * rho;
    let k = rho.floor() as i64;
    let mut acc = 0.0;
    for a in -k..=k {
        for b in -k..=k {
            for c in -k..=k {
                let n = (a * a + b * b + c * c) as f64;
                if n <= r2 {
                    acc += (1.0 + n).powf(lambda);
                }
            }
        }
    }
    acc
}

fn r2_count(n: i64) -> i64 {
    // representations n = b^2 + c^2 with signs and order
    let mut count = 0;
    let mut b = 0;
    while b * b <= n {
        let rest = n - b * b;
        let c = (rest as f64).sqrt().round() as i64;
        for cc in [c - 1, c, c + 1] {
            if cc >= 0 && cc * cc == rest {
                let mult = if b == 0 { 1 } else { 2 } * if cc == 0 { 1 } else { 2 };
                count += mult;
            }
        }
        b += 1;
    }
    count
}

/// Same sum computed shell by shell: `sum_n r_3(n) (1+n)^lambda` over integers `n <= rho^2`.
pub fn lattice_sum_by_shells(lambda: f64, rho: f64) -> f64 {
    if rho < 0.0 {
        return 0.0;
    }
    let nmax = (rho * rho + 1e-9).floor() as i64;
    let mut acc = 0.0;
    for n in 0..=nmax {
        if (n as f64) > rho * rho {
            break;
        }
        let mut r3 = 0;
        let mut a = 0;
        while a * a <= n {
            let mult = if a == 0 { 1 } else { 2 };
            r3 += mult * r2_count(n - a * a);
            a += 1;
        }
        if r3 > 0 {
            acc += r3 as f64 * (1.0 + n as f64).powf(lambda);
        }
    }
    acc
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSumReport {
    pub lambda: f64,
    pub tau: f64,
    pub rhos: Vec<f64>,
    /// `sqrt(sum) / rho^tau`
    pub ratios: Vec<f64>,
    /// empirical `c_4`: the maximum ratio
    pub c4_fit: f64,
    pub max_ratio: f64,
    pub argmax_rho: f64,
    /// log-log slope of the ratio over the largest decade of rho
    pub tail_slope: f64,
    pub bounded: bool,
}

/// Growth slopes above this count as unbounded.
pub const BOUNDED_SLOPE: f64 = 0.05;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Ratios `sqrt(lattice_sum(lambda, rho)) / rho^tau`, `tau = max(lambda + 3/2, 0)`.
pub fn lattice_sum_bound_check(lambda: f64, rhos: &[f64]) -> Result<LatticeSumReport> {
    if (lambda + 1.5).abs() < 1e-12 {
        return Err(Error::CriticalExponent);
    }
    if rhos.is_empty() {
        return invalid("empty rho list");
    }
    if let Some(r) = rhos.iter().find(|r| !(**r >= 1.0)) {
        return invalid(format!("rho = {r} < 1"));
    }
    let tau = (lambda + 1.5).max(0.0);
    let ratios: Vec<f64> = rhos.iter().map(|&r| lattice_sum(lambda, r).sqrt() / r.powf(tau)).collect();
    let (imax, max_ratio) =
        ratios.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let rmax = rhos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (tx, ty): (Vec<f64>, Vec<f64>) =
        rhos.iter().zip(&ratios).filter(|(r, _)| **r >= rmax / 10.0).map(|(a, b)| (*a, *b)).unzip();
    let tail_slope = if tx.len() >= 2 { loglog_slope(&tx, &ty) } else { 0.0 };
    Ok(LatticeSumReport {
        lambda,
        tau,
        rhos: rhos.to_vec(),
        ratios,
        c4_fit: max_ratio,
        max_ratio,
        argmax_rho: rhos[imax],
        tail_slope,
        bounded: max_ratio.is_finite() && tail_slope <= BOUNDED_SLOPE,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// High-frequency splitting inequality:
/// `Re sum_{|g|>rho} (1+|g|^2)^m f^dag(g) conj(f^dag(g) - f^(g))
///   <= 1/8 |f^dag - f|_{H^m}^2 + 2 |f^dag|_{H^s}^2 rho^{2(m-s)}`.
pub fn high_freq_split_check(
    f_dagger: &ContrastField,
    f: &ContrastField,
    params: &SobolevParams,
    rho: f64,
) -> Result<SplitReport> {
    if !(rho > 0.0) {
        return invalid("rho must be positive");
    }
    if params.m > params.s {
        return invalid("m must not exceed s");
    }
    f_dagger.check_same_lattice(f)?;
    let lattice = f.lattice();
    let w = sobolev_weights(lattice, params.m);
    let mut lhs = 0.0;
    for (i, g) in lattice.modes().enumerate() {
        let n2 = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) as f64;
        if n2 > rho * rho {
            let a = f_dagger.coeffs()[i];
            let d = a - f.coeffs()[i];
            lhs += w[i] * (a * d.conj()).re;
        }
    }
    let diff = f_dagger.sub(f)?;
    let rhs = 0.125 * sobolev_norm(&diff, params.m).powi(2)
        + 2.0 * sobolev_norm(f_dagger, params.s).powi(2) * rho.powf(2.0 * (params.m - params.s));
    Ok(SplitReport { lhs, rhs, holds: lhs <= rhs })
}
