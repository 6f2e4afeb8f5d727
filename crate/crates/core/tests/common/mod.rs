#![allow(dead_code)]

pub mod series;

use num_complex::Complex64;
use vsc_lab::forward::ScatterData;

/// Weighted relative L2 error `|a - b| / |b|` over a data set.
pub fn rel_l2(a: &[Complex64], b: &[Complex64], w: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().zip(w).map(|(y, w)| w * y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn dot(p: [f64; 3], q: [f64; 3]) -> f64 {
    p[0] * q[0] + p[1] * q[1] + p[2] * q[2]
}

/// Series far field on the same directions as `d`.
pub fn series_far(s: &series::BallSeries, d: &ScatterData) -> Vec<Complex64> {
    let mut out = Vec::new();
    for inc in &d.sources {
        for obs in &d.receivers {
            out.push(s.far_field(dot(*inc, *obs)));
        }
    }
    out
}

/// Series scattered near field on the same points as `d` (source and receiver radius `r`).
pub fn series_near_scattered(s: &series::BallSeries, d: &ScatterData, r: f64) -> Vec<Complex64> {
    let mut out = Vec::new();
    for y in &d.sources {
        for x in &d.receivers {
            out.push(s.near_scattered(r, dot(*x, *y) / (r * r)));
        }
    }
    out
}

/// Data minus the free-space point-source field.
pub fn scattered_part(d: &ScatterData) -> Vec<Complex64> {
    let mut out = Vec::new();
    for (s, y) in d.sources.iter().enumerate() {
        for (r, x) in d.receivers.iter().enumerate() {
            out.push(d.get(s, r) - vsc_lab::forward::fundamental_solution(d.kappa, *x, *y));
        }
    }
    out
}
