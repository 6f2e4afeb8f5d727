//! Restarted GMRES for complex linear systems given as closures.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { tol: 1e-8, max_iter: 500, restart: 60 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// true relative residual `|b - Ax| / |b|` at exit
    pub residual: f64,
    pub converged: bool,
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b`, starting from the contents of `x`.
pub fn gmres<F>(mut apply: F, b: &[Complex64], x: &mut [Complex64], opts: GmresOptions) -> GmresOutcome
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::default());
        return GmresOutcome { iterations: 0, residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut r = vec![Complex64::default(); n];
    let mut w = vec![Complex64::default(); n];
    let mut iterations = 0;

    loop {
        apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol || iterations >= opts.max_iter {
            return GmresOutcome { iterations, residual: rel, converged: rel <= opts.tol };
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![Complex64::default(); m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![Complex64::default(); m];
        let mut g = vec![Complex64::default(); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;

        for k in 0..m {
            apply(&basis[k], &mut w);
            iterations += 1;
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(vj, &w);
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = Complex64::new(hn, 0.0);

            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j].conj() * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let a = h[k][k];
            let bb = h[k + 1][k];
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = Complex64::default();
            } else if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = bb.conj() / bb.norm();
            } else {
                cs[k] = a.norm() / denom;
                sn[k] = (a / a.norm()) * bb.conj() / denom;
            }
            h[k][k] = cs[k] * a + sn[k] * bb;
            h[k + 1][k] = Complex64::default();
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            k_used = k + 1;

            let est = g[k + 1].norm() / bnorm;
            if est <= opts.tol * 0.5 || hn <= 1e-300 || iterations >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }

        let mut y = vec![Complex64::default(); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}
