//! Subcommand bodies. Each returns its artifacts as bytes; the runner writes and hashes them.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::cache;
use super::config::{Config, Kind};
use super::manifest::FileRecord;
use crate::error::{invalid, Error, Result};
use crate::experiment::{ball_phantom, calibration_family, coefficient_pairs, mode_pairs, random_family, shrinking_family, Setup};
use crate::forward::{data_norm, data_to_bytes, ForwardOperator};
use crate::gos::{admissible_t, calibrate_c3, gos_frame, sample_on_frame, zeta_eta, low_freq_coeff_estimate, verify_gos_bounds, CoeffPair, CoeffEstimateSetup};
use crate::phantom::random_band_limited;
use crate::regularization::{
    add_noise, alpha_rule, rate_abscissa, rate_fit, rate_sweep, tikhonov_minimize, PsiFunction, TikhonovOptions,
    TikhonovProblem,
};
use crate::spectral::{
    embedding_constant, field_from_bytes, field_to_bytes, high_freq_split_check, lattice_sum_bound_check, project_to_d,
    sobolev_norm, ContrastField, SobolevParams,
};
use crate::vsc::{
    calibrate_from_distances, fit_near_to_far, near_to_far_check, psi_composition_far, stability_from_distance,
    vsc_case_from_distance, Branch, NearFarCase, VscCase,
};

/// Artifacts and summary of a finished run.
#[derive(Default)]
pub struct Outcome {
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub summary: serde_json::Value,
    pub timings: BTreeMap<String, f64>,
}

impl Outcome {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push((name.into(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let r = f();
        self.timings.insert(stage.into(), t.elapsed().as_secs_f64());
        r
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Shared inputs of every subcommand.
pub struct Context {
    pub cfg: Config,
    pub setup: Setup,
    pub f_dagger: ContrastField,
    pub inputs: Vec<FileRecord>,
}

impl Context {
    pub fn new(cfg: Config) -> Result<Self> {
        let p = &cfg.problem;
        let setup = Setup {
            kappa: p.kappa,
            radius: p.radius,
            n_points: p.n_sources,
            n_dirs: p.n_dirs,
            max_degree: p.max_degree,
            m: p.m,
            s: p.s,
            beta: p.beta,
            theta: p.theta,
            solver: cfg.solver,
        };
        let mut inputs = Vec::new();
        let f_dagger = match &p.contrast {
            Some(path) => {
                let bytes = std::fs::read(path)
                    .map_err(|e| Error::InvalidArgument(format!("cannot read contrast {}: {e}", path.display())))?;
                inputs.push(FileRecord::new(path, &bytes));
                field_from_bytes(&bytes)?
            }
            None => {
                let lat = setup.lattice()?;
                match p.phantom.as_str() {
                    "zero" => ContrastField::zeros(lat),
                    _ => ball_phantom(lat)?,
                }
            }
        };
        if !(f_dagger.flags().in_d && f_dagger.flags().supported_in_ball) {
            return Err(Error::NotAdmissible("the reference contrast must be admissible".into()));
        }
        Ok(Context { cfg, setup, f_dagger, inputs })
    }

    fn operator(&self, kind: Kind) -> Result<ForwardOperator> {
        match kind {
            Kind::Near => self.setup.near(),
            Kind::Far => self.setup.far(),
        }
    }

    fn kind(&self) -> Kind {
        self.cfg.problem.kind
    }

    /// `C_s = max(|f_dagger|_{H^s}, tiny)`, so the zero phantom still has valid parameters.
    fn params(&self) -> Result<SobolevParams> {
        let c_s = sobolev_norm(&self.f_dagger, self.cfg.problem.s).max(f64::MIN_POSITIVE);
        SobolevParams::new(self.cfg.problem.m, self.cfg.problem.s, c_s)
    }

    fn psi_shape(&self) -> Result<PsiFunction> {
        match self.kind() {
            Kind::Near => PsiFunction::near(1.0, self.cfg.mu()),
            Kind::Far => PsiFunction::far(1.0, self.cfg.problem.theta, self.cfg.mu()),
        }
    }

    fn psi(&self) -> Result<PsiFunction> {
        let a = self.cfg.tikhonov.a.ok_or_else(|| {
            Error::InvalidArgument("the index function constant is not set (tikhonov.a or --A); run vsc-calibrate".into())
        })?;
        Ok(self.psi_shape()?.with_constant(a))
    }

    fn tikhonov_options(&self) -> TikhonovOptions {
        let t = &self.cfg.tikhonov;
        TikhonovOptions { method: t.method, max_iter: t.max_iter, tol: t.tol, ..Default::default() }
    }
}

#[derive(Serialize)]
struct DataRow {
    source: usize,
    receiver: usize,
    re: f64,
    im: f64,
}

pub fn forward(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let op = ctx.operator(ctx.kind())?;
    let data = out.time("forward", || cache::evaluate(&op, &ctx.f_dagger))?;
    let rows: Vec<DataRow> = (0..data.rows())
        .flat_map(|s| (0..data.cols()).map(move |r| (s, r)))
        .map(|(s, r)| {
            let v = data.get(s, r);
            DataRow { source: s, receiver: r, re: v.re, im: v.im }
        })
        .collect();
    out.add("data.bin", data_to_bytes(&data)?);
    out.add("data.csv", csv_bytes(&rows)?);
    out.summary = json!({ "kind": data.kind, "rows": data.rows(), "cols": data.cols(), "data_norm": data_norm(&data) });
    Ok(out)
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[derive(Serialize)]
struct LowFreqRow {
    set: &'static str,
    pair: usize,
    g1: i64,
    g2: i64,
    g3: i64,
    t: f64,
    lhs: f64,
    ln_bound: f64,
    holds: bool,
}

pub fn gos_check(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let f = ctx.f_dagger.clone();
    let kappa = ctx.cfg.problem.kappa;
    let g = ctx.cfg.gos.clone();
    // sup norm as sampled by the solver, which can exceed the coefficient-grid value
    let (z1, _) = zeta_eta(g.gamma, 1.0, kappa)?;
    let f_sup = sample_on_frame(&f, &g.solver, &gos_frame(&z1)).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let t_adm = admissible_t(kappa, g.solver.r_prime, f_sup);
    let t_min = g.t_min.unwrap_or(1.05 * t_adm.max(1.0));
    let t_max = g.t_max.unwrap_or(10.0 * t_min);
    if !(t_min > 0.0 && t_max > t_min) {
        return invalid("need 0 < t_min < t_max");
    }
    ctx.cfg.gos.t_min = Some(t_min);
    ctx.cfg.gos.t_max = Some(t_max);
    let ts = geometric(t_min, t_max, g.n_t);
    let bounds = out.time("gos_bounds", || verify_gos_bounds(&f, g.gamma, &ts, kappa, &g.solver))?;
    out.add("gos_bounds.csv", csv_bytes(&bounds.per_t)?);
    let max_residual = bounds.per_t.iter().fold(0.0f64, |m, r| m.max(r.residual));

    // low-frequency coefficient estimate: calibrate c3, then check held-out pairs
    let lat = *f.lattice();
    // calibrate on single-mode perturbations (weakest data per coefficient), hold out random ones
    let mut fields: Vec<ContrastField> =
        mode_pairs(&f, g.gamma_max, g.n_pairs, 1e-2)?.into_iter().map(|p| p.field).collect();
    fields.extend(coefficient_pairs(&f, g.n_holdout, g.seed)?);
    let op = ctx.operator(Kind::Near)?;
    let refs: Vec<&ContrastField> = fields.iter().collect();
    let w = out.time("near_field_distances", || cache::distances(&op, &f, &refs))?;
    let c_m = fields.iter().chain([&f]).map(|h| sobolev_norm(h, ctx.cfg.problem.m)).fold(0.0, f64::max);
    let setup = CoeffEstimateSetup {
        kappa,
        r_prime: g.solver.r_prime,
        m: ctx.cfg.problem.m,
        c_m,
        m_em: embedding_constant(ctx.cfg.problem.m, &lat)?,
    };
    let t0 = setup.t0()?;
    let lts: Vec<f64> = g.t_factors.iter().map(|k| k * t0).collect();
    let gm = g.gamma_max;
    let gammas: Vec<[i64; 3]> =
        (-gm..=gm).flat_map(|a| (-gm..=gm).flat_map(move |b| (-gm..=gm).map(move |c| [a, b, c]))).collect();
    let pairs: Vec<CoeffPair<'_>> =
        fields.iter().zip(&w).map(|(h, &d)| CoeffPair { f1: &f, f2: h, w_diff_norm: d }).collect();
    let (cal, held) = pairs.split_at(g.n_pairs.min(pairs.len()));
    let c3 = calibrate_c3(cal, &gammas, &lts, &setup)?;
    let mut rows = Vec::new();
    for (set, ps, offset) in [("calibration", cal, 0), ("held_out", held, cal.len())] {
        for (i, p) in ps.iter().enumerate() {
            for &gm in &gammas {
                for &t in &lts {
                    match low_freq_coeff_estimate(p.f1, p.f2, gm, t, p.w_diff_norm, c3.ln_fitted_value, &setup) {
                        Ok(c) => rows.push(LowFreqRow {
                            set,
                            pair: offset + i,
                            g1: gm[0],
                            g2: gm[1],
                            g3: gm[2],
                            t,
                            lhs: c.lhs,
                            ln_bound: c.ln_bound,
                            holds: c.holds,
                        }),
                        Err(Error::InvalidArgument(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    let held_rows: Vec<&LowFreqRow> = rows.iter().filter(|r| r.set == "held_out").collect();
    let held_pass = held_rows.iter().filter(|r| r.holds).count();
    out.add("low_freq_cases.csv", csv_bytes(&rows)?);
    let report = json!({
        "gos_bounds": bounds,
        "max_residual": max_residual,
        "coefficient_estimate": {
            "setup": setup,
            "t0": t0,
            "c3": c3,
            "held_out_cases": held_rows.len(),
            "held_out_pass": held_pass,
        },
    });
    out.add_json("gos_report.json", &report)?;
    out.summary = json!({
        "slope": bounds.slope,
        "c2_fit": bounds.c2_fit,
        "max_residual": max_residual,
        "c3": c3.fitted_value,
        "held_out_pass": format!("{held_pass}/{}", held_rows.len()),
    });
    Ok(out)
}

#[derive(Serialize)]
struct CaseRow<'a> {
    set: &'static str,
    id: usize,
    label: &'a str,
    branch: Branch,
    data_dist_sq: f64,
    diff_hm: f64,
    lhs: f64,
    rhs: f64,
    slack: f64,
    holds: bool,
}

fn case_row<'a>(set: &'static str, id: usize, label: &'a str, c: &VscCase) -> CaseRow<'a> {
    CaseRow {
        set,
        id,
        label,
        branch: c.branch,
        data_dist_sq: c.data_dist_sq,
        diff_hm: c.diff_hm,
        lhs: c.lhs,
        rhs: c.rhs,
        slack: c.rhs - c.lhs,
        holds: c.holds,
    }
}

pub fn vsc_calibrate(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let f = &ctx.f_dagger;
    let v = ctx.cfg.vsc.clone();
    let params = ctx.params()?;
    let beta = ctx.cfg.problem.beta;
    let shape = ctx.psi_shape()?;
    let op = ctx.operator(ctx.kind())?;
    let cal = calibration_family(f, v.n_calibration, v.seed)?;
    let held = random_family(f, v.n_holdout, v.seed.wrapping_add(1))?;
    let fields: Vec<&ContrastField> = cal.iter().chain(&held).map(|p| &p.field).collect();
    let d = out.time("data_distances", || cache::distances(&op, f, &fields))?;
    let d2: Vec<f64> = d.iter().map(|x| x * x).collect();
    let (d_cal, d_held) = d2.split_at(cal.len());
    let cal_fields: Vec<ContrastField> = cal.iter().map(|p| p.field.clone()).collect();
    let report = calibrate_from_distances(f, &cal_fields, d_cal, &shape, beta, &params)?;
    let psi = shape.with_constant(v.safety * report.a_min);
    let held_cases: Vec<VscCase> = held
        .iter()
        .zip(d_held)
        .map(|(p, &d)| vsc_case_from_distance(f, &p.field, &psi, beta, &params, d))
        .collect::<Result<_>>()?;
    // minimality: 0.99 A_min must break at least one calibration case
    let smaller = shape.with_constant(0.99 * report.a_min);
    let fails_below = cal_fields
        .iter()
        .zip(d_cal)
        .map(|(g, &d)| vsc_case_from_distance(f, g, &smaller, beta, &params, d).map(|c| !c.holds))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .any(|x| x);
    let mut rows: Vec<CaseRow<'_>> =
        report.cases.iter().enumerate().map(|(i, c)| case_row("calibration", i, &cal[i].label, c)).collect();
    rows.extend(held_cases.iter().enumerate().map(|(i, c)| case_row("held_out", i, &held[i].label, c)));
    let count = |cs: &[VscCase], b: Branch| cs.iter().filter(|c| c.branch == b).count();
    let held_pass = held_cases.iter().filter(|c| c.holds).count();
    let summary = json!({
        "kind": ctx.kind(),
        "psi": report.psi,
        "a_min": report.a_min,
        "safety": v.safety,
        "n_cases": report.n_cases,
        "n_active": report.n_active,
        "worst_case": report.worst_case,
        "worst_label": cal[report.worst_case].label,
        "minimal": fails_below,
        "calibration_branches": { "large": count(&report.cases, Branch::Large), "small": count(&report.cases, Branch::Small) },
        "held_out_branches": { "large": count(&held_cases, Branch::Large), "small": count(&held_cases, Branch::Small) },
        "held_out_pass": held_pass,
        "held_out_total": held_cases.len(),
        "params": params,
    });
    out.add("cases.csv", csv_bytes(&rows)?);
    out.add_json("calibration.json", &summary)?;
    out.summary = summary;
    Ok(out)
}

#[derive(Serialize)]
struct StabilityRow<'a> {
    id: usize,
    label: &'a str,
    data_dist: f64,
    lhs: f64,
    rhs: f64,
    holds: bool,
}

pub fn stability_check(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let f = &ctx.f_dagger;
    let psi = ctx.psi()?;
    let op = ctx.operator(ctx.kind())?;
    let fam = random_family(f, ctx.cfg.vsc.n_holdout, ctx.cfg.vsc.seed.wrapping_add(2))?;
    let fields: Vec<&ContrastField> = fam.iter().map(|p| &p.field).collect();
    let d = out.time("data_distances", || cache::distances(&op, f, &fields))?;
    let reps = fam
        .iter()
        .zip(&d)
        .map(|(p, &d)| stability_from_distance(f, &p.field, &psi, ctx.cfg.problem.m, d))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<StabilityRow<'_>> = reps
        .iter()
        .enumerate()
        .map(|(i, r)| StabilityRow { id: i, label: &fam[i].label, data_dist: r.data_dist, lhs: r.lhs, rhs: r.rhs, holds: r.holds })
        .collect();
    let pass = reps.iter().filter(|r| r.holds).count();
    out.add("stability.csv", csv_bytes(&rows)?);
    out.summary = json!({ "psi": psi, "pass": pass, "total": reps.len() });
    out.add_json("stability.json", &out.summary.clone())?;
    Ok(out)
}

pub fn tikhonov(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let f = &ctx.f_dagger;
    let psi = ctx.psi()?;
    let op = ctx.operator(ctx.kind())?;
    let t = ctx.cfg.tikhonov.clone();
    let exact = cache::evaluate(&op, f)?;
    let data = add_noise(&exact, t.delta, t.seed)?;
    let alpha = alpha_rule(&psi, t.delta)?;
    let problem = TikhonovProblem::new(&op, data, alpha, ctx.cfg.problem.m)?;
    let opts = ctx.tikhonov_options();
    let (rec, diag) =
        out.time("minimize", || tikhonov_minimize(&problem, &ContrastField::zeros(*f.lattice()), &opts))?;
    let err_hm = sobolev_norm(&rec.sub(f)?, ctx.cfg.problem.m);
    out.add("reconstruction.field", field_to_bytes(&rec));
    out.summary = json!({
        "delta": t.delta,
        "alpha": alpha,
        "err_hm": err_hm,
        "rate_bound": psi.rate_bound(t.delta),
        "diagnostics": diag,
    });
    out.add_json("tikhonov.json", &out.summary.clone())?;
    Ok(out)
}

pub fn rate_sweep_cmd(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let f = &ctx.f_dagger;
    let psi = ctx.psi()?;
    let op = ctx.operator(ctx.kind())?;
    let t = ctx.cfg.tikhonov.clone();
    let opts = ctx.tikhonov_options();
    let recs = out.time("sweep", || rate_sweep(f, &psi, &t.deltas, &op, ctx.cfg.problem.m, t.seed, &opts))?;
    let fit = rate_fit(&recs, &psi);
    let mut plot = String::from("# x = (ln(3 + delta^-2))^(-mu)  y = err_hm\n");
    for r in &recs {
        plot.push_str(&format!("{:.17e} {:.17e}\n", rate_abscissa(&psi, r.delta), r.err_hm));
    }
    let bounds: Vec<f64> = recs.iter().map(|r| psi.rate_bound(r.delta)).collect();
    let within = recs.iter().zip(&bounds).all(|(r, b)| r.err_hm <= *b);
    out.add("rate_sweep.csv", csv_bytes(&recs)?);
    out.add("rate_plot.dat", plot.into_bytes());
    out.summary = json!({
        "psi": psi,
        "fit": fit,
        "rate_bounds": bounds,
        "within_bound": within,
    });
    out.add_json("rate_fit.json", &out.summary.clone())?;
    Ok(out)
}

#[derive(Serialize)]
struct NearFarRow<'a> {
    id: usize,
    label: &'a str,
    set: &'static str,
    near_norm_sq: f64,
    far_norm: f64,
    bound: f64,
    log_slack: f64,
    holds: bool,
}

pub fn near_to_far(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let f = &ctx.f_dagger;
    let nf = ctx.cfg.near_far.clone();
    let p = &ctx.cfg.problem;
    let theta = p.theta;
    let near = ForwardOperator::near(p.kappa, 2.0 * p.radius, p.n_sources, &ctx.cfg.solver)?;
    let far = ctx.operator(Kind::Far)?;
    let fam = shrinking_family(f, nf.n_directions, nf.n_levels, nf.eps_max, nf.ratio, nf.seed)?;
    let fields: Vec<&ContrastField> = fam.iter().map(|p| &p.field).collect();
    let (dn, df) = out.time("data_distances", || {
        Ok((cache::distances(&near, f, &fields)?, cache::distances(&far, f, &fields)?))
    })?;
    let cases: Vec<NearFarCase> =
        dn.iter().zip(&df).map(|(n, a)| NearFarCase { near_norm_sq: n * n, far_norm: *a }).collect();
    let fit_cases: Vec<NearFarCase> = cases.iter().step_by(2).copied().collect();
    let fit = fit_near_to_far(&fit_cases, theta, nf.delta_max)?;
    let mut rows = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let r = near_to_far_check(c, &fit, nf.delta_max)?;
        rows.push(NearFarRow {
            id: i,
            label: &fam[i].label,
            set: if i % 2 == 0 { "fit" } else { "held_out" },
            near_norm_sq: r.near_norm_sq,
            far_norm: r.far_norm,
            bound: r.bound,
            log_slack: r.log_slack,
            holds: r.holds,
        });
    }
    let fit_pass = rows.iter().filter(|r| r.set == "fit" && r.holds).count();
    let held_total = rows.iter().filter(|r| r.set == "held_out").count();
    let held_pass = rows.iter().filter(|r| r.set == "held_out" && r.holds).count();
    let composed = match ctx.cfg.tikhonov.a {
        Some(a) => {
            let t_max = (nf.delta_max * nf.delta_max).min(0.25 * (fit.omega * fit.rho).powi(2));
            Some(psi_composition_far(&PsiFunction::near(a, ctx.cfg.mu())?, theta, &fit, t_max)?)
        }
        None => None,
    };
    out.add("near_far.csv", csv_bytes(&rows)?);
    out.summary = json!({
        "empirical_fit": true,
        "fit": fit,
        "fit_pass": format!("{fit_pass}/{}", fit_cases.len()),
        "held_out_pass": held_pass,
        "held_out_total": held_total,
        "psi_far": composed,
    });
    out.add_json("near_far.json", &out.summary.clone())?;
    Ok(out)
}

#[derive(Serialize)]
struct SumRow {
    lambda: f64,
    rho: f64,
    ratio: f64,
}

pub fn lattice_audit(ctx: &mut Context) -> Result<Outcome> {
    let mut out = Outcome::default();
    let a = ctx.cfg.audit.clone();
    let rhos = geometric(1.0, a.rho_max, a.n_rho);
    let sums = out.time("lattice_sums", || {
        a.lambdas.par_iter().map(|&l| lattice_sum_bound_check(l, &rhos)).collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<SumRow> = sums
        .iter()
        .flat_map(|r| r.rhos.iter().zip(&r.ratios).map(move |(&rho, &ratio)| SumRow { lambda: r.lambda, rho, ratio }))
        .collect();
    let lat = ctx.setup.lattice()?;
    let params = SobolevParams::new(ctx.cfg.problem.m, ctx.cfg.problem.s, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut split_total = 0;
    let mut split_pass = 0;
    for _ in 0..a.n_pairs {
        let f1 = project_to_d(&random_band_limited(lat, 0.5, 2.0, &mut rng)?);
        let f2 = project_to_d(&random_band_limited(lat, 0.5, 1.0, &mut rng)?);
        for &rho in &a.split_rhos {
            split_total += 1;
            split_pass += usize::from(high_freq_split_check(&f1, &f2, &params, rho)?.holds);
        }
    }
    out.add("lattice_sums.csv", csv_bytes(&rows)?);
    out.summary = json!({
        "lattice_sums": sums,
        "all_bounded": sums.iter().all(|r| r.bounded),
        "split_pass": split_pass,
        "split_total": split_total,
    });
    out.add_json("audit.json", &out.summary.clone())?;
    Ok(out)
}
