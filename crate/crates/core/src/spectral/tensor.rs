use num_complex::Complex64;

use super::FOURIER_SCALE;

/// Separable map between lattice coefficients (`|g|_inf <= N`) and samples on a tensor grid
/// with the same 1D node set on every axis.
#[derive(Debug, Clone)]
pub struct TensorSynth {
    n: usize,
    m: usize,
    /// `e[k * s + q] = exp(i (q - N) x_k)`
    e: Vec<Complex64>,
}

impl TensorSynth {
    pub fn new(max_degree: usize, nodes: &[f64]) -> Self {
        let s = 2 * max_degree + 1;
        let mut e = Vec::with_capacity(nodes.len() * s);
        for &x in nodes {
            for q in 0..s {
                e.push(Complex64::from_polar(1.0, (q as f64 - max_degree as f64) * x));
            }
        }
        TensorSynth { n: max_degree, m: nodes.len(), e }
    }

    fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn grid_len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn coeff_len(&self) -> usize {
        self.side().pow(3)
    }

    /// Grid samples `(2 pi)^{-3/2} sum_g c(g) exp(i g.x)`.
    pub fn synth(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let (s, m) = (self.side(), self.m);
        let e = &self.e;
        // t1[a][b][k]
        let mut t1 = vec![Complex64::default(); s * s * m];
        for ab in 0..s * s {
            let c = &coeffs[ab * s..(ab + 1) * s];
            for k in 0..m {
                let ek = &e[k * s..(k + 1) * s];
                t1[ab * m + k] = c.iter().zip(ek).map(|(x, y)| x * y).sum();
            }
        }
        // t2[a][j][k]
        let mut t2 = vec![Complex64::default(); s * m * m];
        for a in 0..s {
            for j in 0..m {
                let ej = &e[j * s..(j + 1) * s];
                let out = &mut t2[(a * m + j) * m..(a * m + j + 1) * m];
                for (b, eb) in ej.iter().enumerate() {
                    let row = &t1[(a * s + b) * m..(a * s + b + 1) * m];
                    for (o, r) in out.iter_mut().zip(row) {
                        *o += eb * r;
                    }
                }
            }
        }
        let mut out = vec![Complex64::default(); m * m * m];
        for i in 0..m {
            let ei = &e[i * s..(i + 1) * s];
            let dst = &mut out[i * m * m..(i + 1) * m * m];
            for (a, ea) in ei.iter().enumerate() {
                let src = &t2[a * m * m..(a + 1) * m * m];
                let ea = ea * FOURIER_SCALE;
                for (o, r) in dst.iter_mut().zip(src) {
                    *o += ea * r;
                }
            }
        }
        out
    }

    fn contract(&self, grid: &[Complex64], conjugate: bool) -> Vec<Complex64> {
        let (s, m) = (self.side(), self.m);
        let e: Vec<Complex64> = if conjugate { self.e.iter().map(|z| z.conj()).collect() } else { self.e.clone() };
        // u1[a][j][k] = sum_i e[i][a] grid[i][j][k]
        let mut u1 = vec![Complex64::default(); s * m * m];
        for i in 0..m {
            let src = &grid[i * m * m..(i + 1) * m * m];
            for a in 0..s {
                let ea = e[i * s + a];
                let dst = &mut u1[a * m * m..(a + 1) * m * m];
                for (o, r) in dst.iter_mut().zip(src) {
                    *o += ea * r;
                }
            }
        }
        // u2[a][b][k] = sum_j e[j][b] u1[a][j][k]
        let mut u2 = vec![Complex64::default(); s * s * m];
        for a in 0..s {
            for j in 0..m {
                let src = &u1[(a * m + j) * m..(a * m + j + 1) * m];
                for b in 0..s {
                    let eb = e[j * s + b];
                    let dst = &mut u2[(a * s + b) * m..(a * s + b + 1) * m];
                    for (o, r) in dst.iter_mut().zip(src) {
                        *o += eb * r;
                    }
                }
            }
        }
        let mut out = vec![Complex64::default(); s * s * s];
        for ab in 0..s * s {
            let src = &u2[ab * m..(ab + 1) * m];
            for c in 0..s {
                let mut acc = Complex64::default();
                for (k, r) in src.iter().enumerate() {
                    acc += e[k * s + c] * r;
                }
                out[ab * s + c] = acc * FOURIER_SCALE;
            }
        }
        out
    }

    /// Conjugate transpose of [`synth`](Self::synth).
    pub fn adjoint(&self, grid: &[Complex64]) -> Vec<Complex64> {
        self.contract(grid, true)
    }

    /// Plain transpose of [`synth`](Self::synth).
    pub fn transpose(&self, grid: &[Complex64]) -> Vec<Complex64> {
        self.contract(grid, false)
    }
}
