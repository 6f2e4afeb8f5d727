//! Near-field and far-field forward maps and their linearizations.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::data::{DataKind, ScatterData};
use super::incident::{fundamental_solution, Incidence, IncidentField};
use super::model::ContrastModel;
use super::solver::{LsSolver, SolverConfig, TotalField};
use super::sphere::SpherePoints;
use crate::error::{invalid, Error, Result};
use crate::spectral::{ContrastField, Lattice, TensorSynth};

/// Forward map `f -> F(f)` for a fixed measurement configuration.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    pub kappa: f64,
    pub kind: DataKind,
    /// source points (near) or incident directions (far)
    pub sources: SpherePoints,
    /// receiver points (near) or observation directions (far)
    pub receivers: SpherePoints,
    pub solver: SolverConfig,
}

impl ForwardOperator {
    /// Sources on a standard set of `n_points` on the sphere of radius `radius`, receivers on the
    /// staggered companion set (the near field is singular where source and receiver coincide).
    pub fn near(kappa: f64, radius: f64, n_points: usize, cfg: &SolverConfig) -> Result<Self> {
        if !(radius > PI) {
            return invalid(format!("measurement radius {radius} must exceed pi"));
        }
        Self::custom(
            DataKind::NearField { radius },
            kappa,
            SpherePoints::standard(n_points)?.scaled(radius),
            SpherePoints::staggered(n_points)?.scaled(radius),
            cfg,
        )
    }

    /// Incident and observation directions on the same standard set.
    pub fn far(kappa: f64, n_dirs: usize, cfg: &SolverConfig) -> Result<Self> {
        let dirs = SpherePoints::standard(n_dirs)?;
        Self::custom(DataKind::FarField, kappa, dirs.clone(), dirs, cfg)
    }

    pub fn custom(
        kind: DataKind,
        kappa: f64,
        sources: SpherePoints,
        receivers: SpherePoints,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(kappa > 0.0) {
            return invalid("wavenumber must be positive");
        }
        if sources.is_empty() || receivers.is_empty() {
            return invalid("empty point set");
        }
        let op = ForwardOperator { kappa, kind, sources, receivers, solver: *cfg };
        op.template().validate()?;
        Ok(op)
    }

    fn source_field(&self, s: usize) -> IncidentField {
        let p = self.sources.points[s];
        let kind = match self.kind {
            DataKind::NearField { .. } => Incidence::PointSource { y: p },
            DataKind::FarField => Incidence::PlaneWave { d: p },
        };
        IncidentField { kind, kappa: self.kappa }
    }

    /// Measurement function of receiver `r` as an incident field.
    fn receiver_field(&self, r: usize) -> IncidentField {
        let p = self.receivers.points[r];
        let kind = match self.kind {
            DataKind::NearField { .. } => Incidence::PointSource { y: p },
            DataKind::FarField => Incidence::PlaneWave { d: [-p[0], -p[1], -p[2]] },
        };
        IncidentField { kind, kappa: self.kappa }
    }

    /// Coefficient in front of the volume integral in the data.
    pub fn coupling(&self) -> f64 {
        match self.kind {
            DataKind::NearField { .. } => -self.kappa * self.kappa,
            DataKind::FarField => -self.kappa * self.kappa / (4.0 * PI),
        }
    }

    /// Data configuration with zero values.
    pub fn template(&self) -> ScatterData {
        ScatterData {
            kind: self.kind,
            kappa: self.kappa,
            sources: self.sources.points.clone(),
            source_weights: self.sources.weights.clone(),
            receivers: self.receivers.points.clone(),
            receiver_weights: self.receivers.weights.clone(),
            values: vec![Complex64::default(); self.sources.len() * self.receivers.len()],
        }
    }

    fn assemble(&self, solver: &LsSolver, fields: &[TotalField]) -> ScatterData {
        let gs: Vec<IncidentField> = (0..self.receivers.len()).map(|r| self.receiver_field(r)).collect();
        let c = self.coupling();
        let rows: Vec<Vec<Complex64>> = fields
            .par_iter()
            .enumerate()
            .map(|(s, u)| {
                let m = solver.measure(u, &gs);
                m.iter()
                    .enumerate()
                    .map(|(r, v)| {
                        let direct = match self.kind {
                            DataKind::NearField { .. } => {
                                fundamental_solution(self.kappa, self.receivers.points[r], self.sources.points[s])
                            }
                            DataKind::FarField => Complex64::default(),
                        };
                        direct + v * c
                    })
                    .collect()
            })
            .collect();
        let mut d = self.template();
        d.values = rows.concat();
        d
    }

    fn solve_all(&self, solver: &LsSolver, incs: &[IncidentField]) -> Result<Vec<TotalField>> {
        incs.par_iter().map(|inc| solver.solve(inc)).collect()
    }

    /// Total fields for every source.
    pub fn total_fields(&self, f: &dyn ContrastModel) -> Result<(LsSolver, Vec<TotalField>)> {
        let solver = LsSolver::new(f, self.kappa, &self.solver)?;
        let incs: Vec<IncidentField> = (0..self.sources.len()).map(|s| self.source_field(s)).collect();
        let fields = self.solve_all(&solver, &incs)?;
        Ok((solver, fields))
    }

    /// `F(f)`
    pub fn evaluate(&self, f: &dyn ContrastModel) -> Result<ScatterData> {
        let (solver, fields) = self.total_fields(f)?;
        Ok(self.assemble(&solver, &fields))
    }

    /// `F(f)` together with the fields needed for derivatives (collocation only).
    pub fn linearize(&self, f: &ContrastField) -> Result<Linearization> {
        let (solver, fields) = self.total_fields(f)?;
        if solver.is_galerkin() {
            return invalid("derivatives are available for the collocation discretization only");
        }
        let data = self.assemble(&solver, &fields);
        let grid = *solver.grid();
        let ball: Vec<usize> = (0..grid.len())
            .filter(|&i| {
                let x = grid.point(i);
                x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= PI * PI
            })
            .collect();

        // receiver fields: reuse a source field when the measurement function coincides with it
        let srcs: Vec<IncidentField> = (0..self.sources.len()).map(|s| self.source_field(s)).collect();
        let rcvs: Vec<IncidentField> = (0..self.receivers.len()).map(|r| self.receiver_field(r)).collect();
        let reuse: Vec<Option<usize>> = rcvs.iter().map(|g| srcs.iter().position(|s| same_incidence(s, g))).collect();
        let to_solve: Vec<IncidentField> =
            rcvs.iter().zip(&reuse).filter(|(_, r)| r.is_none()).map(|(g, _)| *g).collect();
        let solved = self.solve_all(&solver, &to_solve)?;
        let mut solved_iter = solved.into_iter();
        let restrict = |u: &TotalField| -> Vec<Complex64> { ball.iter().map(|&i| u.values[i]).collect() };
        let src_fields: Vec<Vec<Complex64>> = fields.iter().map(restrict).collect();
        let rcv_fields: Vec<Vec<Complex64>> = reuse
            .iter()
            .map(|r| match r {
                Some(s) => src_fields[*s].clone(),
                None => restrict(&solved_iter.next().expect("one solve per receiver")),
            })
            .collect();

        Ok(Linearization {
            scale: Complex64::new(self.coupling() * grid.cell_volume(), 0.0),
            weights: data.entry_weights(),
            data,
            lattice: *f.lattice(),
            synth: TensorSynth::new(f.lattice().max_degree, &grid.nodes()),
            grid_len: grid.len(),
            ball,
            src_fields,
            rcv_fields,
        })
    }

    /// Gradient of `f -> |F(f) - g|^2` with respect to the real `L^2` inner product on
    /// coefficients, given `residual = F(f) - g`.
    pub fn frechet_adjoint_apply(&self, f: &ContrastField, residual: &ScatterData) -> Result<ContrastField> {
        let lin = self.linearize(f)?;
        lin.check_residual(residual)?;
        let g = lin.adjoint(&residual.values);
        ContrastField::from_coeffs(lin.lattice, g.into_iter().map(|v| v * 2.0).collect())
    }
}

fn same_incidence(a: &IncidentField, b: &IncidentField) -> bool {
    let close = |p: [f64; 3], q: [f64; 3]| (0..3).all(|i| (p[i] - q[i]).abs() <= 1e-13 * (1.0 + p[i].abs()));
    match (a.kind, b.kind) {
        (Incidence::PointSource { y: p }, Incidence::PointSource { y: q }) => close(p, q),
        (Incidence::PlaneWave { d: p }, Incidence::PlaneWave { d: q }) => close(p, q),
        _ => false,
    }
}

/// Derivative of the data with respect to the lattice coefficients at a fixed contrast.
///
/// Entry `(s, r)` of `J h` is `c h^3 sum_j U_s(x_j) V_r(x_j) (S h)(x_j)` over grid points in the
/// ball of radius pi, where `U_s` is the total field of source `s`, `V_r` the total field whose
/// incident wave is the measurement function of receiver `r`, and `S` synthesis on the grid.
pub struct Linearization {
    pub data: ScatterData,
    lattice: Lattice,
    scale: Complex64,
    weights: Vec<f64>,
    synth: TensorSynth,
    grid_len: usize,
    ball: Vec<usize>,
    src_fields: Vec<Vec<Complex64>>,
    rcv_fields: Vec<Vec<Complex64>>,
}

impl Linearization {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n_data(&self) -> usize {
        self.src_fields.len() * self.rcv_fields.len()
    }

    /// Product quadrature weights `w_s w_r`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_residual(&self, r: &ScatterData) -> Result<()> {
        if r.values.len() != self.n_data() || r.kind != self.data.kind || r.sources != self.data.sources {
            return Err(Error::InvalidArgument("residual does not match the data configuration".into()));
        }
        Ok(())
    }

    fn on_ball(&self, h: &[Complex64]) -> Vec<Complex64> {
        let full = self.synth.synth(h);
        self.ball.iter().map(|&i| full[i]).collect()
    }

    /// `J h`
    pub fn apply(&self, h: &[Complex64]) -> Vec<Complex64> {
        let sh = self.on_ball(h);
        let mut out = Vec::with_capacity(self.n_data());
        for u in &self.src_fields {
            let us: Vec<Complex64> = u.iter().zip(&sh).map(|(a, b)| a * b).collect();
            for v in &self.rcv_fields {
                out.push(us.iter().zip(v).map(|(a, b)| a * b).sum::<Complex64>() * self.scale);
            }
        }
        out
    }

    /// `J^H W r` with `W` the product quadrature weights.
    pub fn adjoint(&self, r: &[Complex64]) -> Vec<Complex64> {
        let nr = self.rcv_fields.len();
        let nb = self.ball.len();
        let mut acc = vec![Complex64::default(); nb];
        for (s, u) in self.src_fields.iter().enumerate() {
            let mut inner = vec![Complex64::default(); nb];
            for (ri, v) in self.rcv_fields.iter().enumerate() {
                let c = r[s * nr + ri] * self.weights[s * nr + ri];
                if c == Complex64::default() {
                    continue;
                }
                for (o, x) in inner.iter_mut().zip(v) {
                    *o += x.conj() * c;
                }
            }
            for ((a, x), y) in acc.iter_mut().zip(u).zip(&inner) {
                *a += x.conj() * y;
            }
        }
        let mut full = vec![Complex64::default(); self.grid_len];
        let sc = self.scale.conj();
        for (&i, a) in self.ball.iter().zip(&acc) {
            full[i] = a * sc;
        }
        self.synth.adjoint(&full)
    }

    /// Dense `J` (rows in data order, columns in lattice order).
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let nr = self.rcv_fields.len();
        let rows: Vec<Vec<Complex64>> = (0..self.n_data())
            .into_par_iter()
            .map(|k| {
                let (u, v) = (&self.src_fields[k / nr], &self.rcv_fields[k % nr]);
                let mut full = vec![Complex64::default(); self.grid_len];
                for ((&i, a), b) in self.ball.iter().zip(u).zip(v) {
                    full[i] = a * b * self.scale;
                }
                self.synth.transpose(&full)
            })
            .collect();
        let nc = self.lattice.n_modes();
        DMatrix::from_fn(rows.len(), nc, |i, j| rows[i][j])
    }
}
