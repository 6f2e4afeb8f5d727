use std::ffi::{CStr, CString};
use std::ptr;

use vsc_lab_ffi::*;

fn last_error() -> String {
    let p = vsc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn field_roundtrip_through_coefficients_and_file() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(vsc_field_ball_phantom(3, &mut f), VscStatus::Ok);
        assert_eq!(vsc_field_is_admissible(f), 1);
        let n = vsc_field_n_modes(f);
        assert_eq!(n, 343);
        let mut buf = vec![0.0; 2 * n];
        assert_eq!(vsc_field_coeffs(f, buf.as_mut_ptr(), buf.len()), VscStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(vsc_field_from_coeffs(3, 7, buf.as_ptr(), buf.len(), &mut g), VscStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(vsc_field_sobolev_norm(f, 2.0, &mut a), VscStatus::Ok);
        assert_eq!(vsc_field_sobolev_norm(g, 2.0, &mut b), VscStatus::Ok);
        assert_eq!(a, b);
        assert!(a > 0.0);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("f.field").to_str().unwrap()).unwrap();
        assert_eq!(vsc_field_save(f, path.as_ptr()), VscStatus::Ok);
        let mut h = ptr::null_mut();
        assert_eq!(vsc_field_load(path.as_ptr(), &mut h), VscStatus::Ok);
        let mut back = vec![0.0; 2 * n];
        assert_eq!(vsc_field_coeffs(h, back.as_mut_ptr(), back.len()), VscStatus::Ok);
        assert_eq!(buf, back);
        vsc_field_free(f);
        vsc_field_free(g);
        vsc_field_free(h);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut f = ptr::null_mut();
        let coeffs = [0.0; 4];
        assert_eq!(vsc_field_from_coeffs(3, 7, coeffs.as_ptr(), 4, &mut f), VscStatus::DimensionMismatch);
        assert!(last_error().contains("expected 686"));
        assert!(f.is_null());
        assert_eq!(vsc_field_zeros(2, ptr::null_mut()), VscStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut out = 0.0;
        assert_eq!(vsc_field_sobolev_norm(ptr::null(), 2.0, &mut out), VscStatus::NullPointer);
        assert_eq!(vsc_alpha_rule(1.0, 0.5, -1.0, &mut out), VscStatus::InvalidArgument);
        let mut op = ptr::null_mut();
        assert_eq!(vsc_operator_near(1.0, 2.0, 8, 16, &mut op), VscStatus::InvalidArgument);
        assert!(last_error().contains("exceed pi"));
        // success clears the message
        assert_eq!(vsc_field_zeros(2, &mut f), VscStatus::Ok);
        assert!(vsc_last_error_message().is_null());
        vsc_field_free(f);
        assert_eq!(vsc_field_n_modes(ptr::null()), 0);
        assert_eq!(vsc_field_is_admissible(ptr::null()), -1);
    }
}

#[test]
fn zero_contrast_gives_zero_far_field() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(vsc_field_zeros(2, &mut f), VscStatus::Ok);
        let mut op = ptr::null_mut();
        assert_eq!(vsc_operator_far(1.0, 8, 16, &mut op), VscStatus::Ok);
        let mut d = ptr::null_mut();
        assert_eq!(vsc_operator_evaluate(op, f, &mut d), VscStatus::Ok);
        let (mut r, mut c) = (0, 0);
        assert_eq!(vsc_data_shape(d, &mut r, &mut c), VscStatus::Ok);
        assert!(r > 0 && c > 0);
        let mut v = vec![1.0; 2 * r * c];
        assert_eq!(vsc_data_values(d, v.as_mut_ptr(), v.len()), VscStatus::Ok);
        assert!(v.iter().all(|x| *x == 0.0));
        let mut dist = -1.0;
        assert_eq!(vsc_data_distance(d, d, &mut dist), VscStatus::Ok);
        assert_eq!(dist, 0.0);
        vsc_data_free(d);
        vsc_operator_free(op);
        vsc_field_free(f);
    }
}

#[test]
fn parameter_rule_matches_index_function_derivative() {
    let (a, mu, delta) = (3.0, 4.0 / 7.0, 1e-3);
    let mut alpha = 0.0;
    let mut p1 = 0.0;
    let mut p2 = 0.0;
    let t = 4.0 * delta * delta;
    let h = 1e-6 * t;
    unsafe {
        assert_eq!(vsc_alpha_rule(a, mu, delta, &mut alpha), VscStatus::Ok);
        assert_eq!(vsc_psi(a, mu, t + h, &mut p1), VscStatus::Ok);
        assert_eq!(vsc_psi(a, mu, t - h, &mut p2), VscStatus::Ok);
    }
    let deriv = (p1 - p2) / (2.0 * h);
    assert!((1.0 / (2.0 * alpha) - deriv).abs() <= 1e-6 * deriv);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(vsc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
