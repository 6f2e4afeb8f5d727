use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vsc_lab::error::Error;
use vsc_lab::forward::*;
use vsc_lab::phantom::{random_band_limited, smoothed_ball, windowed_mode};
use vsc_lab::spectral::*;

fn small_cfg() -> SolverConfig {
    SolverConfig::default().with_grid(16).with_tolerance(1e-11)
}

fn phantom() -> ContrastField {
    smoothed_ball(Lattice::minimal(3).unwrap(), Complex64::new(0.3, -0.05), 0.3 * PI, 0.8 * PI).unwrap()
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[test]
fn adjoint_identity() {
    let op = ForwardOperator::near(1.0, 1.2 * PI, 8, &small_cfg()).unwrap();
    let f = phantom();
    let lin = op.linearize(&f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_band_limited(*f.lattice(), 1.0, 1.0, &mut rng).unwrap();
    let r: Vec<Complex64> = (0..lin.n_data()).map(|i| Complex64::new((i as f64).sin(), (1.3 * i as f64).cos())).collect();
    let jh = lin.apply(h.coeffs());
    let lhs: Complex64 = jh.iter().zip(&r).zip(lin.weights()).map(|((a, b), w)| a.conj() * b * w).sum();
    let adj = lin.adjoint(&r);
    let rhs: Complex64 = h.coeffs().iter().zip(&adj).map(|(a, b)| a.conj() * b).sum();
    assert!((lhs - rhs).norm() < 1e-11 * lhs.norm(), "{lhs} vs {rhs}");
}

#[test]
fn dense_matrix_matches_apply() {
    let op = ForwardOperator::far(1.0, 6, &small_cfg()).unwrap();
    let f = phantom();
    let lin = op.linearize(&f).unwrap();
    let h = random_band_limited(*f.lattice(), 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let mat = lin.matrix();
    let hv = nalgebra::DVector::from_column_slice(h.coeffs());
    let dense: Vec<Complex64> = (&mat * hv).iter().copied().collect();
    let jh = lin.apply(h.coeffs());
    assert!(max_abs_diff(&dense, &jh) < 1e-12 * max_abs(&jh));
}

#[test]
fn derivative_matches_central_differences() {
    let op = ForwardOperator::near(1.0, 1.2 * PI, 8, &small_cfg()).unwrap();
    let f = phantom();
    let lat = *f.lattice();
    let h = windowed_mode(lat, [1, -1, 2], 0.5, 0.3).unwrap();
    let jh = op.linearize(&f).unwrap().apply(h.coeffs());
    let eps = 1e-4;
    let fp = op.evaluate(&f.lin_comb(1.0, &h, eps).unwrap()).unwrap();
    let fm = op.evaluate(&f.lin_comb(1.0, &h, -eps).unwrap()).unwrap();
    let fd: Vec<Complex64> = fp.values.iter().zip(&fm.values).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    assert!(max_abs_diff(&fd, &jh) < 1e-6 * max_abs(&jh), "{}", max_abs_diff(&fd, &jh) / max_abs(&jh));
}

#[test]
fn born_approximation_error_is_quadratic() {
    let op = ForwardOperator::far(1.0, 6, &small_cfg()).unwrap();
    let lat = Lattice::minimal(3).unwrap();
    let f = phantom();
    let zero = ContrastField::zeros(lat);
    let j0 = op.linearize(&zero).unwrap().apply(f.coeffs());
    let err = |eps: f64| {
        let d = op.evaluate(&f.scaled(eps)).unwrap();
        let lin: Vec<Complex64> = j0.iter().map(|v| v * eps).collect();
        max_abs_diff(&d.values, &lin)
    };
    let (e1, e2) = (err(1e-2), err(5e-3));
    let order = (e1 / e2).ln() / 2f64.ln();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn far_field_reciprocity() {
    let op = ForwardOperator::far(1.0, 8, &small_cfg()).unwrap();
    let d = op.evaluate(&phantom()).unwrap();
    let n = d.rows();
    let mut worst = 0.0f64;
    for s in 0..n {
        for r in 0..n {
            let (sa, ra) = (op.sources.antipode(s).unwrap(), op.receivers.antipode(r).unwrap());
            // u(x_r, d_s) = u(-d_s, -x_r)
            worst = worst.max((d.get(s, r) - d.get(ra, sa)).norm());
        }
    }
    assert!(worst < 1e-9 * max_abs(&d.values), "{worst}");
}

#[test]
fn near_field_reciprocity() {
    let cfg = small_cfg();
    let a = SpherePoints::standard(8).unwrap().scaled(4.0);
    let b = SpherePoints::staggered(8).unwrap().scaled(4.0);
    let kind = DataKind::NearField { radius: 4.0 };
    let ab = ForwardOperator::custom(kind, 1.0, a.clone(), b.clone(), &cfg).unwrap().evaluate(&phantom()).unwrap();
    let ba = ForwardOperator::custom(kind, 1.0, b, a, &cfg).unwrap().evaluate(&phantom()).unwrap();
    let mut worst = 0.0f64;
    for s in 0..ab.rows() {
        for r in 0..ab.cols() {
            worst = worst.max((ab.get(s, r) - ba.get(r, s)).norm());
        }
    }
    assert!(worst < 1e-9 * max_abs(&ab.values), "{worst}");
}

#[test]
fn zero_contrast_gives_incident_field() {
    let lat = Lattice::minimal(2).unwrap();
    let zero = ContrastField::zeros(lat);
    let far = ForwardOperator::far(2.0, 6, &small_cfg()).unwrap().evaluate(&zero).unwrap();
    assert!(far.values.iter().all(|v| *v == Complex64::default()));
    let near = ForwardOperator::near(2.0, 4.0, 6, &small_cfg()).unwrap().evaluate(&zero).unwrap();
    for s in 0..near.rows() {
        for r in 0..near.cols() {
            let (x, y) = (near.receivers[r], near.sources[s]);
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
            let phi = Complex64::from_polar(1.0 / (4.0 * PI * d), 2.0 * d);
            assert!((near.get(s, r) - phi).norm() <= 1e-14 * phi.norm());
        }
    }
}

#[test]
fn inadmissible_contrast_is_rejected() {
    let lat = Lattice::minimal(2).unwrap();
    let op = ForwardOperator::far(1.0, 6, &small_cfg()).unwrap();
    let gain = smoothed_ball(lat, Complex64::new(0.0, 0.0), 0.3 * PI, 0.8 * PI).unwrap();
    let mut c = gain.coeffs().to_vec();
    c[lat.index([0, 0, 0]).unwrap()] = Complex64::new(0.0, 3.0);
    let bad = ContrastField::from_coeffs(lat, c).unwrap();
    assert!(matches!(op.evaluate(&bad), Err(Error::NotAdmissible(_))));
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(ForwardOperator::near(1.0, 3.0, 8, &small_cfg()).is_err());
    assert!(ForwardOperator::far(-1.0, 8, &small_cfg()).is_err());
    assert!(ForwardOperator::far(1.0, 8, &SolverConfig::default().with_grid(1)).is_err());
}

#[test]
fn data_bytes_roundtrip_and_distance() {
    let op = ForwardOperator::near(1.0, 1.2 * PI, 6, &small_cfg()).unwrap();
    let d = op.evaluate(&phantom()).unwrap();
    let back = data_from_bytes(&data_to_bytes(&d).unwrap()).unwrap();
    assert_eq!(back, d);
    assert_eq!(data_distance(&d, &back).unwrap(), 0.0);
    let twice = d.scaled(Complex64::new(2.0, 0.0));
    assert!((data_distance(&twice, &d).unwrap() - data_norm(&d)).abs() < 1e-14 * data_norm(&d));
    let bytes = data_to_bytes(&d).unwrap();
    assert!(data_from_bytes(&bytes[..bytes.len() / 2]).is_err());
}

#[test]
fn ball_model_converges_with_the_grid() {
    // a piecewise constant ball against a reference on a finer grid
    let ball = BallContrast::with_index(0.8 * PI, 1.1);
    let err = |m: usize| {
        let cfg = SolverConfig::default().with_grid(m).with_tolerance(1e-11);
        let fine = SolverConfig::default().with_grid(48).with_tolerance(1e-11);
        let a = far_field_data(&ball, 1.0, 6, &cfg).unwrap();
        let b = far_field_data(&ball, 1.0, 6, &fine).unwrap();
        data_distance(&a, &b).unwrap() / data_norm(&b)
    };
    let (e16, e24) = (err(16), err(24));
    assert!(e24 < e16, "{e16} {e24}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn linearization_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -2.0f64..2.0) {
        let op = ForwardOperator::far(1.0, 6, &small_cfg()).unwrap();
        let f = phantom();
        let lin = op.linearize(&f).unwrap();
        let lat = *f.lattice();
        let h1 = random_band_limited(lat, 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(s1)).unwrap();
        let h2 = random_band_limited(lat, 1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(s2)).unwrap();
        let comb = h1.lin_comb(a, &h2, 1.0).unwrap();
        let lhs = lin.apply(comb.coeffs());
        let rhs: Vec<Complex64> = lin.apply(h1.coeffs()).iter().zip(lin.apply(h2.coeffs())).map(|(x, y)| x * a + y).collect();
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * max_abs(&rhs).max(1e-300));
    }

    #[test]
    fn noise_free_evaluation_is_deterministic(seed in any::<u64>()) {
        let lat = Lattice::minimal(2).unwrap();
        let f = project_to_d(&random_band_limited(lat, 0.2, 2.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap());
        let op = ForwardOperator::far(1.0, 6, &small_cfg()).unwrap();
        prop_assert_eq!(op.evaluate(&f).unwrap(), op.evaluate(&f).unwrap());
    }
}
