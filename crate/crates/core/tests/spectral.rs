use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vsc_lab::phantom::random_band_limited;
use vsc_lab::spectral::*;

fn field(lat: Lattice, seed: u64, amp: f64, smooth: f64) -> ContrastField {
    random_band_limited(lat, amp, smooth, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let n: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let d: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (n / d.max(1e-300)).sqrt()
}

#[test]
fn synthesis_matches_direct_sum() {
    let lat = Lattice::minimal(3).unwrap();
    let f = field(lat, 1, 1.0, 1.0);
    let pts = [[0.3, -1.1, 2.0], [0.0, 0.0, 0.0], [-2.9, 1.7, 0.4]];
    let got = f.eval_points(&pts);
    for (x, v) in pts.iter().zip(&got) {
        let mut acc = Complex64::default();
        for g in lat.modes() {
            let ph = g[0] as f64 * x[0] + g[1] as f64 * x[1] + g[2] as f64 * x[2];
            acc += f.coeff(g) * Complex64::from_polar(1.0, ph);
        }
        acc /= (2.0 * PI).powf(1.5);
        assert!((acc - v).norm() < 1e-12 * (1.0 + acc.norm()), "{acc} vs {v}");
    }
}

#[test]
fn parseval_on_the_grid() {
    let lat = Lattice::minimal(4).unwrap();
    let f = field(lat, 2, 1.0, 1.5);
    let g = lat.grid_size as f64;
    let grid_l2: f64 = f.synthesize().iter().map(|v| v.norm_sqr()).sum::<f64>() * (2.0 * PI / g).powi(3);
    let coeff_l2: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
    assert!((grid_l2 - coeff_l2).abs() < 1e-12 * coeff_l2);
    assert!((sobolev_norm(&f, 0.0).powi(2) - coeff_l2).abs() < 1e-12 * coeff_l2);
}

#[test]
fn field_format_rejects_garbage() {
    let lat = Lattice::minimal(2).unwrap();
    let bytes = field_to_bytes(&field(lat, 3, 1.0, 1.0));
    assert!(field_from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(field_from_bytes(b"not a field").is_err());
    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    assert!(field_from_bytes(&bad).is_err());
}

#[test]
fn field_file_roundtrip() {
    let lat = Lattice::new(3, 9).unwrap();
    let f = field(lat, 4, 0.5, 2.0);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.field");
    save_field(&f, &p).unwrap();
    assert_eq!(load_field(&p).unwrap(), f);
}

#[test]
fn lattice_sum_critical_exponent_is_rejected() {
    assert!(lattice_sum_bound_check(-1.5, &[1.0, 2.0]).is_err());
}

#[test]
fn lattice_sum_small_radii() {
    // rho < 1 only sees the origin; rho = 1 adds the six unit vectors
    assert_eq!(lattice_sum(1.0, 0.5), 1.0);
    assert_eq!(lattice_sum(1.0, 1.0), 1.0 + 6.0 * 2.0);
    assert_eq!(lattice_sum(0.0, 2.0), 33.0);
}

#[test]
fn mismatched_lattices_are_rejected() {
    let a = ContrastField::zeros(Lattice::minimal(2).unwrap());
    let b = ContrastField::zeros(Lattice::minimal(3).unwrap());
    assert!(a.sub(&b).is_err());
    assert!(ContrastField::from_coeffs(Lattice::minimal(2).unwrap(), vec![Complex64::default(); 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analysis_inverts_synthesis(seed in any::<u64>(), n in 1usize..5, extra in 0usize..4, smooth in 0.5f64..3.0) {
        let lat = Lattice::new(n, 2 * n + 1 + extra).unwrap();
        let f = field(lat, seed, 1.0, smooth);
        let back = analyze(&f.synthesize(), lat).unwrap();
        prop_assert!(rel(back.coeffs(), f.coeffs()) < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_admissible(seed in any::<u64>(), n in 2usize..5, amp in 0.1f64..3.0) {
        let lat = Lattice::minimal(n).unwrap();
        let p = project_to_d(&field(lat, seed, amp, 1.0));
        prop_assert!(p.flags().in_d);
        prop_assert!(p.flags().supported_in_ball);
        let pp = project_to_d(&p);
        prop_assert!(rel(pp.coeffs(), p.coeffs()) < 1e-12);
    }

    #[test]
    fn lattice_sum_agrees_with_shell_count(lambda in -3.0f64..2.0, rho in 0.0f64..9.0) {
        let a = lattice_sum(lambda, rho);
        let b = lattice_sum_by_shells(lambda, rho);
        prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
    }

    #[test]
    fn sobolev_norm_is_monotone_in_order(seed in any::<u64>(), m in 0.0f64..3.0, dm in 0.0f64..2.0) {
        let f = field(Lattice::minimal(3).unwrap(), seed, 1.0, 1.0);
        prop_assert!(sobolev_norm(&f, m) <= sobolev_norm(&f, m + dm) * (1.0 + 1e-14));
        let ip = hm_inner(&f, &f, m).unwrap();
        prop_assert!((ip.re - sobolev_norm(&f, m).powi(2)).abs() <= 1e-12 * ip.re);
        prop_assert!(ip.im.abs() <= 1e-12 * ip.re);
    }

    #[test]
    fn hm_inner_is_hermitian_and_cauchy_schwarz(s1 in any::<u64>(), s2 in any::<u64>(), m in 0.0f64..3.0) {
        let lat = Lattice::minimal(3).unwrap();
        let (f, g) = (field(lat, s1, 1.0, 1.0), field(lat, s2, 1.0, 2.0));
        let a = hm_inner(&f, &g, m).unwrap();
        let b = hm_inner(&g, &f, m).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1e-300));
        prop_assert!(a.norm() <= sobolev_norm(&f, m) * sobolev_norm(&g, m) * (1.0 + 1e-12));
    }

    #[test]
    fn high_frequency_splitting_holds(s1 in any::<u64>(), s2 in any::<u64>(), rho in 0.5f64..6.0, amp in 0.05f64..2.0) {
        let lat = Lattice::minimal(4).unwrap();
        let f1 = project_to_d(&field(lat, s1, amp, 2.0));
        let f2 = project_to_d(&field(lat, s2, amp, 1.0));
        let params = SobolevParams::new(2.0, 4.0, 1.0).unwrap();
        let r = high_freq_split_check(&f1, &f2, &params, rho).unwrap();
        prop_assert!(r.holds, "lhs {} rhs {}", r.lhs, r.rhs);
    }

    #[test]
    fn byte_format_roundtrip(seed in any::<u64>(), n in 1usize..4, extra in 0usize..3) {
        let f = field(Lattice::new(n, 2 * n + 1 + extra).unwrap(), seed, 1.0, 1.0);
        prop_assert_eq!(field_from_bytes(&field_to_bytes(&f)).unwrap(), f);
    }
}
