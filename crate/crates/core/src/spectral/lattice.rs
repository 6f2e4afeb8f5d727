use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Truncated lattice `{g in Z^3 : |g|_inf <= N}` with a sampling grid of
/// `grid_size^3` points `x_j = -pi + 2 pi j / grid_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub max_degree: usize,
    pub grid_size: usize,
}

impl Lattice {
    pub fn new(max_degree: usize, grid_size: usize) -> Result<Self> {
        if max_degree < 1 {
            return invalid("lattice degree N must be at least 1");
        }
        if grid_size < 2 * max_degree + 1 {
            return invalid(format!(
                "grid_size {grid_size} < 2N+1 = {} would alias retained modes",
                2 * max_degree + 1
            ));
        }
        Ok(Lattice { max_degree, grid_size })
    }

    /// Lattice with the minimal grid `2N+1`, on which analysis and synthesis are inverse.
    pub fn minimal(max_degree: usize) -> Result<Self> {
        Self::new(max_degree, 2 * max_degree + 1)
    }

    /// Modes per axis, `2N+1`.
    pub fn side(&self) -> usize {
        2 * self.max_degree + 1
    }

    pub fn n_modes(&self) -> usize {
        let s = self.side();
        s * s * s
    }

    pub fn n_grid(&self) -> usize {
        self.grid_size.pow(3)
    }

    pub fn index(&self, g: [i64; 3]) -> Option<usize> {
        let n = self.max_degree as i64;
        if g.iter().any(|c| c.abs() > n) {
            return None;
        }
        let s = self.side() as i64;
        Some((((g[0] + n) * s + (g[1] + n)) * s + (g[2] + n)) as usize)
    }

    pub fn gamma(&self, idx: usize) -> [i64; 3] {
        let s = self.side();
        let n = self.max_degree as i64;
        let c = (idx % s) as i64 - n;
        let b = ((idx / s) % s) as i64 - n;
        let a = (idx / (s * s)) as i64 - n;
        [a, b, c]
    }

    pub fn modes(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        (0..self.n_modes()).map(move |i| self.gamma(i))
    }

    pub fn grid_coord(&self, j: usize) -> f64 {
        -PI + 2.0 * PI * j as f64 / self.grid_size as f64
    }

    pub fn grid_point(&self, idx: usize) -> [f64; 3] {
        let g = self.grid_size;
        [self.grid_coord(idx / (g * g)), self.grid_coord((idx / g) % g), self.grid_coord(idx % g)]
    }
}

/// Smoothness indices `3/2 < m < s`, `s != 2m + 3/2`, and the bound `C_s >= |f^dagger|_{H^s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub m: f64,
    pub s: f64,
    pub c_s: f64,
}

impl SobolevParams {
    pub fn new(m: f64, s: f64, c_s: f64) -> Result<Self> {
        let p = SobolevParams { m, s, c_s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.5) {
            return invalid(format!("m = {} violates the requirement m > 3/2", self.m));
        }
        if !(self.s > self.m) {
            return invalid(format!("s = {} must exceed m = {}", self.s, self.m));
        }
        if (self.s - (2.0 * self.m + 1.5)).abs() < 1e-12 {
            return invalid("s = 2m + 3/2 is the borderline case and is not supported");
        }
        if !(self.c_s > 0.0) {
            return invalid("C_s must be positive");
        }
        Ok(())
    }

    /// `tau = max(2m + 3/2 - s, 0)`
    pub fn tau(&self) -> f64 {
        (2.0 * self.m + 1.5 - self.s).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let l = Lattice::new(3, 8).unwrap();
        for i in 0..l.n_modes() {
            assert_eq!(l.index(l.gamma(i)), Some(i));
        }
        assert_eq!(l.gamma(0), [-3, -3, -3]);
        assert_eq!(l.index([0, 0, 0]), Some(l.n_modes() / 2));
        assert!(l.index([4, 0, 0]).is_none());
    }

    #[test]
    fn rejects_aliasing_grid() {
        assert!(Lattice::new(4, 8).is_err());
        assert!(Lattice::new(0, 8).is_err());
    }

    #[test]
    fn sobolev_params_validation() {
        assert!(SobolevParams::new(2.0, 4.0, 1.0).is_ok());
        assert!(SobolevParams::new(1.5, 4.0, 1.0).is_err());
        assert!(SobolevParams::new(2.0, 5.5, 1.0).is_err());
        assert!(SobolevParams::new(2.0, 1.9, 1.0).is_err());
        assert_eq!(SobolevParams::new(2.0, 4.0, 1.0).unwrap().tau(), 1.5);
    }
}
