//! Cubic 3D FFTs on row-major `n x n x n` arrays (last index fastest).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized forward/inverse 3D transforms of a fixed cubic size.
#[derive(Clone)]
pub struct Fft3 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = plans(n);
        Fft3 { n, fwd, inv }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X[k] = sum_j x[j] exp(-2 pi i j.k / n)`
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &*self.fwd);
    }

    /// `x[j] = sum_k X[k] exp(+2 pi i j.k / n)` (no 1/n^3 factor)
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &*self.inv);
    }

    fn transform(&self, data: &mut [Complex64], plan: &dyn Fft<f64>) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n, "array is not n^3");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); n2 * n];

        // last axis: contiguous lines
        plan.process_with_scratch(data, &mut scratch);

        // middle axis: transpose each plane
        for plane in 0..n {
            let src = &mut data[plane * n2..(plane + 1) * n2];
            let dst = &mut buf[plane * n2..(plane + 1) * n2];
            for j in 0..n {
                for k in 0..n {
                    dst[k * n + j] = src[j * n + k];
                }
            }
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for plane in 0..n {
            let src = &buf[plane * n2..(plane + 1) * n2];
            let dst = &mut data[plane * n2..(plane + 1) * n2];
            for k in 0..n {
                for j in 0..n {
                    dst[j * n + k] = src[k * n + j];
                }
            }
        }

        // first axis: gather columns
        for i in 0..n {
            let row = &data[i * n2..(i + 1) * n2];
            for (jk, v) in row.iter().enumerate() {
                buf[jk * n + i] = *v;
            }
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for jk in 0..n2 {
            let col = &buf[jk * n..(jk + 1) * n];
            for (i, v) in col.iter().enumerate() {
                data[i * n2 + jk] = *v;
            }
        }
    }
}

/// Signed frequency of FFT bin `idx` for length `n` (Nyquist maps to `-n/2`).
#[inline]
pub fn signed_freq(idx: usize, n: usize) -> i64 {
    if idx < n.div_ceil(2) {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// FFT bin holding signed frequency `k`.
#[inline]
pub fn bin_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}
