use num_complex::Complex64;
use proptest::prelude::*;
use vsc_lab::forward::*;
use vsc_lab::phantom::{smooth_bump, windowed_mode};
use vsc_lab::regularization::*;
use vsc_lab::spectral::*;

const M: f64 = 2.0;

fn truth() -> ContrastField {
    smooth_bump(Lattice::minimal(2).unwrap(), Complex64::new(0.3, -0.05), 2.5).unwrap()
}

fn far_op() -> ForwardOperator {
    ForwardOperator::far(1.0, 6, &SolverConfig::default().with_grid(16).with_tolerance(1e-11)).unwrap()
}

fn psi_strategy() -> impl Strategy<Value = PsiFunction> {
    prop_oneof![
        (1e-2f64..1e3, 0.05f64..=1.0).prop_map(|(a, mu)| PsiFunction::near(a, mu).unwrap()),
        (1e-2f64..1e3, 0.05f64..0.95, 0.05f64..=1.0).prop_map(|(b, th, mu)| PsiFunction::far(b, th, mu).unwrap()),
    ]
}

#[test]
fn mu_exponent_values_and_domain() {
    assert!((mu_exponent(2.0, 3.0).unwrap() - 1.0 / 3.5).abs() < 1e-15);
    assert_eq!(mu_exponent(2.0, 10.0).unwrap(), 1.0);
    assert!(mu_exponent(1.5, 3.0).is_err());
    assert!(mu_exponent(2.0, 2.0).is_err());
}

#[test]
fn psi_rejects_bad_parameters() {
    assert!(PsiFunction::near(0.0, 0.5).is_err());
    assert!(PsiFunction::near(1.0, 0.0).is_err());
    assert!(PsiFunction::near(1.0, 1.5).is_err());
    assert!(PsiFunction::far(1.0, 1.0, 0.5).is_err());
    assert!(PsiFunction::far(-1.0, 0.5, 0.5).is_err());
    assert!(alpha_rule(&PsiFunction::near(1.0, 0.5).unwrap(), 0.0).is_err());
}

#[test]
fn noise_has_exact_norm_and_is_seeded() {
    let d = far_op().evaluate(&truth()).unwrap();
    let a = add_noise(&d, 1e-3, 11).unwrap();
    let b = add_noise(&d, 1e-3, 11).unwrap();
    let c = add_noise(&d, 1e-3, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!((data_distance(&a, &d).unwrap() - 1e-3).abs() < 1e-15);
    assert_eq!(add_noise(&d, 0.0, 1).unwrap(), d);
    assert!(add_noise(&d, -1.0, 1).is_err());
}

#[test]
fn born_gradient_matches_finite_differences() {
    let op = far_op();
    let ft = truth();
    let born = BornModel::new(&op, &ContrastField::zeros(*ft.lattice())).unwrap();
    let data = add_noise(&born.evaluate(&ft).unwrap(), 1e-2, 3).unwrap();
    let problem = TikhonovProblem::new(&born, data, 1e-2, M).unwrap();
    let f = ft.scaled(0.5);
    let (j0, grad) = problem.gradient(&f).unwrap();
    assert!((j0 - problem.objective(&f).unwrap()).abs() <= 1e-14 * j0);
    for (g, phase) in [([1, 0, -1], 0.2), ([2, 1, 0], 1.1), ([0, 0, 0], 0.0)] {
        let h = windowed_mode(*f.lattice(), g, 1.0, phase).unwrap();
        let h = h.scaled(1.0 / sobolev_norm(&h, M));
        let analytic = hm_inner(&grad, &h, M).unwrap().re;
        let eps = 1e-3;
        let jp = problem.objective(&f.lin_comb(1.0, &h, eps).unwrap()).unwrap();
        let jm = problem.objective(&f.lin_comb(1.0, &h, -eps).unwrap()).unwrap();
        let numeric = (jp - jm) / (2.0 * eps);
        // the objective is quadratic, so central differences are exact up to rounding
        assert!((analytic - numeric).abs() <= 1e-7 * analytic.abs().max(1.0), "{g:?}: {analytic} vs {numeric}");
    }
}

#[test]
fn mismatched_data_is_rejected() {
    let op = far_op();
    let other = ForwardOperator::far(1.0, 8, &SolverConfig::default().with_grid(16)).unwrap();
    let d = other.evaluate(&truth()).unwrap();
    assert!(TikhonovProblem::new(&op, d.clone(), 1.0, M).is_err());
    let own = op.evaluate(&truth()).unwrap();
    assert!(TikhonovProblem::new(&op, own, 0.0, M).is_err());
}

#[test]
fn unconstrained_quadratic_methods_agree() {
    let op = far_op();
    let ft = truth();
    let zero = ContrastField::zeros(*ft.lattice());
    let born = BornModel::new(&op, &zero).unwrap();
    let data = add_noise(&born.evaluate(&ft).unwrap(), 1e-3, 5).unwrap();
    let mut problem = TikhonovProblem::new(&born, data, 1e-1, M).unwrap();
    problem.constrained = false;
    let (fg, dg) = tikhonov_minimize(&problem, &zero, &TikhonovOptions::gauss_newton()).unwrap();
    let pg = TikhonovOptions { max_iter: 5000, tol: 1e-10, ..TikhonovOptions::default() };
    let (fp, dp) = tikhonov_minimize(&problem, &zero, &pg).unwrap();
    let (jg, jp) = (problem.objective(&fg).unwrap(), problem.objective(&fp).unwrap());
    assert!((jg - jp).abs() <= 1e-6 * jg, "{jg} vs {jp} ({} / {} iterations)", dg.iterations, dp.iterations);
    assert!(sobolev_norm(&fg.sub(&fp).unwrap(), M) <= 1e-3 * sobolev_norm(&fg, M));
    let (_, grad) = problem.gradient(&fg).unwrap();
    assert!(sobolev_norm(&grad, M) <= 1e-6 * (1.0 + sobolev_norm(&fg, M)));
}

#[test]
fn constrained_gauss_newton_descends_and_stays_admissible() {
    let op = far_op();
    let ft = project_to_d(&truth());
    let zero = ContrastField::zeros(*ft.lattice());
    let data = add_noise(&op.evaluate(&ft).unwrap(), 1e-3, 9).unwrap();
    let psi = PsiFunction::near(100.0, 0.5).unwrap();
    let problem = TikhonovProblem::new(&op, data, alpha_rule(&psi, 1e-3).unwrap(), M).unwrap();
    let (f, diag) = tikhonov_minimize(&problem, &zero, &TikhonovOptions::gauss_newton()).unwrap();
    assert!(diag.stayed_in_d && f.flags().in_d);
    let h = &diag.objective_history;
    assert!(h.windows(2).all(|w| w[1] <= w[0]), "{h:?}");
    assert!(problem.objective(&f).unwrap() < problem.objective(&zero).unwrap());
    assert!(sobolev_norm(&f.sub(&ft).unwrap(), M) < sobolev_norm(&ft, M));
}

#[test]
fn inadmissible_start_is_rejected() {
    let op = far_op();
    let data = op.evaluate(&truth()).unwrap();
    let problem = TikhonovProblem::new(&op, data, 1.0, M).unwrap();
    let lat = Lattice::minimal(2).unwrap();
    let mut c = vec![Complex64::default(); lat.n_modes()];
    c[lat.index([0, 0, 0]).unwrap()] = Complex64::new(0.0, 5.0);
    let bad = ContrastField::from_coeffs(lat, c).unwrap();
    assert!(tikhonov_minimize(&problem, &bad, &TikhonovOptions::gauss_newton()).is_err());
}

#[test]
fn rate_fit_recovers_proportional_data() {
    let psi = PsiFunction::far(50.0, 0.4, 0.6).unwrap();
    let recs: Vec<ExperimentRecord> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&delta| ExperimentRecord { delta, alpha: 1.0, err_hm: 3.0 * rate_abscissa(&psi, delta), misfit: 0.0, iterations: 0, seed: 0 })
        .collect();
    let fit = rate_fit(&recs, &psi);
    assert!((fit.slope - 3.0).abs() < 1e-13);
    assert!((fit.r_squared - 1.0).abs() < 1e-13);
}

#[test]
fn rate_sweep_is_reproducible() {
    let op = far_op();
    let ft = project_to_d(&truth());
    let psi = PsiFunction::near(300.0, 0.5).unwrap();
    let opts = TikhonovOptions { max_iter: 3, ..TikhonovOptions::gauss_newton() };
    let a = rate_sweep(&ft, &psi, &[1e-2, 1e-3], &op, M, 4, &opts).unwrap();
    let b = rate_sweep(&ft, &psi, &[1e-2, 1e-3], &op, M, 4, &opts).unwrap();
    assert_eq!(a.len(), 2);
    assert!(a[0].delta < a[1].delta);
    assert_eq!(a, b);
    assert!(rate_sweep(&ft, &psi, &[], &op, M, 4, &opts).is_err());
    assert_ne!(job_seed(4, 0), job_seed(4, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn alpha_rule_balances_the_derivative(psi in psi_strategy(), ld in -8.0f64..0.0) {
        let delta = 10f64.powf(ld);
        let alpha = alpha_rule(&psi, delta).unwrap();
        prop_assert!((2.0 * alpha * psi.derivative(4.0 * delta * delta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_is_increasing_concave_and_vanishes_at_zero(psi in psi_strategy(), lt in -12.0f64..3.0, r in 1.01f64..3.0) {
        prop_assert_eq!(psi.eval(0.0), 0.0);
        let t = 10f64.powf(lt);
        let (a, b, c) = (psi.eval(t / r), psi.eval(t), psi.eval(t * r));
        prop_assert!(a < b && b < c);
        // concavity on the three points t/r < t < t r
        let chord = a + (b - a) / (t - t / r) * (t * r - t / r);
        prop_assert!(c <= chord * (1.0 + 1e-12));
        prop_assert!(psi.derivative(t) > 0.0);
        prop_assert!(psi.derivative(t * r) <= psi.derivative(t) * (1.0 + 1e-12));
    }

    #[test]
    fn psi_derivative_matches_difference_quotient(psi in psi_strategy(), lt in -10.0f64..2.0) {
        let t = 10f64.powf(lt);
        let h = 1e-5 * t;
        let fd = (psi.eval(t + h) - psi.eval(t - h)) / (2.0 * h);
        prop_assert!((fd - psi.derivative(t)).abs() <= 1e-6 * psi.derivative(t));
    }

    #[test]
    fn bounds_scale_with_the_constant(psi in psi_strategy(), ld in -8.0f64..0.0, k in 0.1f64..10.0) {
        let delta = 10f64.powf(ld);
        prop_assert!((psi.rate_bound(delta) - 2.0 * psi.stability_bound(delta)).abs() <= 1e-14 * psi.rate_bound(delta));
        let scaled = psi.with_constant(k * psi.constant());
        prop_assert!((scaled.rate_bound(delta) - k.sqrt() * psi.rate_bound(delta)).abs() <= 1e-12 * scaled.rate_bound(delta));
        prop_assert!((psi.unit().eval(delta) * psi.constant() - psi.eval(delta)).abs() <= 1e-12 * psi.eval(delta));
        prop_assert_eq!(psi.stability_bound(0.0), 0.0);
    }
}
