use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use vsc_lab::gos::*;
use vsc_lab::phantom::smooth_bump;
use vsc_lab::spectral::*;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn small_cfg() -> GosConfig {
    GosConfig { grid_size: 24, ..GosConfig::default() }
}

#[test]
fn zero_contrast_gives_zero_remainder() {
    let zero = ContrastField::zeros(Lattice::minimal(2).unwrap());
    let (z, _) = zeta_eta([1, 0, 1], 3.0, 1.0).unwrap();
    let sol = solve_gos(&zero, &z, &small_cfg()).unwrap();
    assert!(sol.v.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn remainder_solves_its_equation_and_decays() {
    let f = smooth_bump(Lattice::minimal(3).unwrap(), Complex64::new(0.4, -0.1), 2.5).unwrap();
    let cfg = small_cfg();
    let mut prev = f64::INFINITY;
    for t in [3.0, 6.0, 12.0] {
        let (z, _) = zeta_eta([0, 1, 0], t, 1.0).unwrap();
        let sol = solve_gos(&f, &z, &cfg).unwrap();
        assert!(sol.residual < 1e-8, "residual {}", sol.residual);
        assert!(sol.check_residual(&f) < 1e-8);
        assert!(sol.norms.v_l2 < prev);
        prev = sol.norms.v_l2;
        let n = sol.recompute_norms();
        assert!((n.v_l2 - sol.norms.v_l2).abs() <= 1e-12 * sol.norms.v_l2);
    }
}

#[test]
fn solver_rejects_t_below_admissibility() {
    let f = smooth_bump(Lattice::minimal(2).unwrap(), Complex64::new(0.9, 0.0), 2.5).unwrap();
    let cfg = small_cfg();
    let (z, _) = zeta_eta([0, 0, 0], 0.5, 1.0).unwrap();
    assert!(solve_gos(&f, &z, &cfg).is_err());
}

#[test]
fn t_zero_formula() {
    let t0 = t_zero(2.0, 1.5, 2.4 * PI, 0.3).unwrap();
    assert!((t0 - 2.0 * 2.25 * 2.4 * 0.3 * 2.0).abs() < 1e-12);
    assert!(t_zero(0.0, 1.0, 1.0, 1.0).is_err());
    assert!((admissible_t(2.0, PI, 0.5) - 4.0).abs() < 1e-15);
}

#[test]
fn coefficient_estimate_rejects_out_of_range_arguments() {
    let lat = Lattice::minimal(2).unwrap();
    let f = smooth_bump(lat, Complex64::new(0.3, 0.0), 2.0).unwrap();
    let setup = CoeffEstimateSetup { kappa: 1.0, r_prime: 2.4 * PI, m: 2.0, c_m: 1.0, m_em: 0.2 };
    let t0 = setup.t0().unwrap();
    assert!(low_freq_coeff_estimate(&f, &f, [0, 0, 0], 0.5 * t0, 1.0, 0.0, &setup).is_err());
    let far = [40, 0, 0];
    assert!(low_freq_coeff_estimate(&f, &f, far, t0, 1.0, 0.0, &setup).is_err());
    let same = low_freq_coeff_estimate(&f, &f, [1, 0, 0], t0, 0.0, 0.0, &setup).unwrap();
    assert!(same.holds && same.lhs == 0.0);
}

#[test]
fn calibrated_c3_is_tight() {
    let lat = Lattice::minimal(2).unwrap();
    let f1 = smooth_bump(lat, Complex64::new(0.3, 0.0), 2.0).unwrap();
    let f2 = smooth_bump(lat, Complex64::new(0.35, -0.02), 2.2).unwrap();
    let f3 = smooth_bump(lat, Complex64::new(0.2, 0.0), 1.5).unwrap();
    let setup = CoeffEstimateSetup { kappa: 1.0, r_prime: 2.4 * PI, m: 2.0, c_m: 1.0, m_em: 0.2 };
    let t0 = setup.t0().unwrap();
    let pairs = [
        CoeffPair { f1: &f1, f2: &f2, w_diff_norm: 1e-3 },
        CoeffPair { f1: &f1, f2: &f3, w_diff_norm: 5e-3 },
    ];
    let gammas = [[0, 0, 0], [1, 0, 0], [1, 1, 0]];
    let ts = [t0, 2.0 * t0];
    let rep = calibrate_c3(&pairs, &gammas, &ts, &setup).unwrap();
    let mut tight = false;
    for p in &pairs {
        for &g in &gammas {
            for &t in &ts {
                let c = low_freq_coeff_estimate(p.f1, p.f2, g, t, p.w_diff_norm, rep.ln_fitted_value, &setup).unwrap();
                assert!(c.holds);
                let below = low_freq_coeff_estimate(p.f1, p.f2, g, t, p.w_diff_norm, rep.ln_fitted_value - 1e-6, &setup).unwrap();
                tight |= !below.holds;
            }
        }
    }
    assert!(tight);
}

/// `int_{B_pi} f e^{-i g x}` by a midpoint rule on an axis-aligned grid.
fn masked_coefficient(f: &ContrastField, g: [i64; 3], n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let c = |i: usize| -PI + (i as f64 + 0.5) * h;
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [c(i), c(j), c(k)];
                if dot(x, x) < PI * PI {
                    pts.push(x);
                }
            }
        }
    }
    let gf = [g[0] as f64, g[1] as f64, g[2] as f64];
    let acc: Complex64 = pts.iter().zip(f.eval_points(&pts)).map(|(x, v)| v * Complex64::from_polar(1.0, -dot(gf, *x))).sum();
    acc.norm() * h.powi(3)
}

#[test]
fn bilinear_identity_for_zero_remainders() {
    // with v1 = v2 = 0 the integrand reduces to (f1 - f2) e^{-i g x}
    let lat = Lattice::minimal(3).unwrap();
    let f = smooth_bump(lat, Complex64::new(0.4, -0.1), 2.5).unwrap();
    let zero = ContrastField::zeros(lat);
    let g = [1, 1, 0];
    let expect = masked_coefficient(&f, g, 128);
    for m in [32, 48] {
        let cfg = GosConfig { grid_size: m, ..GosConfig::default() };
        let (z, e) = zeta_eta(g, 4.0, 1.0).unwrap();
        let u1 = solve_gos(&zero, &z, &cfg).unwrap();
        let u2 = solve_gos(&zero, &e, &cfg).unwrap();
        let rep = lemma31_check(&f, &zero, &u1, &u2, 1.0, 1e-6).unwrap();
        assert!((rep.lhs - expect).abs() < 2e-4 * expect, "m={m}: {} vs {expect}", rep.lhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeta_eta_identities(g in prop::array::uniform3(-6i64..=6), t in 0.0f64..50.0, kappa in 0.1f64..5.0) {
        let g2 = dot([g[0] as f64, g[1] as f64, g[2] as f64], [g[0] as f64, g[1] as f64, g[2] as f64]);
        prop_assume!(kappa * kappa + t * t >= g2 / 4.0);
        let (z, e) = zeta_eta(g, t, kappa).unwrap();
        let k2 = Complex64::new(kappa * kappa, 0.0);
        let size = 1.0 + kappa * kappa + t * t + g2;
        prop_assert!((bilinear_dot(&z.zeta, &z.zeta) - k2).norm() <= 1e-12 * size);
        prop_assert!((bilinear_dot(&e.zeta, &e.zeta) - k2).norm() <= 1e-12 * size);
        for ((a, b), gi) in z.zeta.iter().zip(&e.zeta).zip(g) {
            prop_assert_eq!(a + b, Complex64::new(-gi as f64, 0.0));
        }
        prop_assert!((z.t - t).abs() <= 1e-12 * (1.0 + t));
    }

    #[test]
    fn frames_are_orthonormal(g in prop::array::uniform3(-6i64..=6)) {
        let FramePair { d1, d2 } = frame_vectors(g);
        let gf = [g[0] as f64, g[1] as f64, g[2] as f64];
        prop_assert!((dot(d1, d1) - 1.0).abs() < 1e-14);
        prop_assert!((dot(d2, d2) - 1.0).abs() < 1e-14);
        prop_assert!(dot(d1, d2).abs() < 1e-14);
        prop_assert!(dot(d1, gf).abs() < 1e-12);
        prop_assert!(dot(d2, gf).abs() < 1e-12);
    }

    #[test]
    fn solver_frame_is_orthonormal_and_aligned(g in prop::array::uniform3(-3i64..=3), t in 1.0f64..20.0) {
        prop_assume!(1.0 + t * t >= (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) as f64 / 4.0);
        let (z, _) = zeta_eta(g, t, 1.0).unwrap();
        let fr = gos_frame(&z);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(fr[i], fr[j]) - want).abs() < 1e-13);
            }
        }
        let im = z.imag_part();
        prop_assert!((dot(fr[0], im).abs() - t).abs() < 1e-12 * (1.0 + t));
    }
}
