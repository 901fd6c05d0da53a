use std::ffi::{CStr, CString};
use std::ptr;

use tvar_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        tvar_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn constant_curve(theta: &[f64], sigma: f64) -> *mut TvarCurve {
    let mut c = ptr::null_mut();
    let s = unsafe { tvar_curve_constant(theta.as_ptr(), theta.len(), sigma, &mut c) };
    assert_eq!(s, TvarStatus::Ok);
    c
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(tvar_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn curve_round_trip() {
    let c = constant_curve(&[0.4, -0.2], 1.5);
    assert_eq!(unsafe { tvar_curve_dimension(c) }, 2);
    let mut theta = [0.0; 2];
    let mut sigma = 0.0;
    let s = unsafe { tvar_curve_eval(c, 0.3, theta.as_mut_ptr(), 2, &mut sigma) };
    assert_eq!(s, TvarStatus::Ok);
    assert_eq!(theta, [0.4, -0.2]);
    assert_eq!(sigma, 1.5);

    let s = unsafe { tvar_curve_eval(c, 0.3, theta.as_mut_ptr(), 1, &mut sigma) };
    assert_eq!(s, TvarStatus::BufferTooSmall);
    assert!(last_error().contains("2 needed"));
    unsafe { tvar_curve_free(c) };
}

#[test]
fn curve_from_toml_text() {
    let text = CString::new("kind = \"polynomial\"\ncoeffs = [[0.1, 0.3]]\nsigma = 1.0\n").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { tvar_curve_from_toml(text.as_ptr(), &mut c) }, TvarStatus::Ok);
    let mut theta = [0.0];
    let mut sigma = 0.0;
    unsafe { tvar_curve_eval(c, 1.0, theta.as_mut_ptr(), 1, &mut sigma) };
    assert!((theta[0] - 0.4).abs() < 1e-15);
    unsafe { tvar_curve_free(c) };

    let bad = CString::new("kind = \"nope\"").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { tvar_curve_from_toml(bad.as_ptr(), &mut c) }, TvarStatus::Validation);
    assert!(c.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn unstable_constant_curve_is_rejected() {
    let mut c = ptr::null_mut();
    let theta = [1.2];
    let s = unsafe { tvar_curve_constant(theta.as_ptr(), 1, 1.0, &mut c) };
    assert_eq!(s, TvarStatus::Stability);
    assert!(c.is_null());
}

#[test]
fn null_arguments_are_reported() {
    let mut out = 0.0;
    assert_eq!(unsafe { tvar_spectral_radius(ptr::null(), 2, &mut out) }, TvarStatus::NullPointer);
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { tvar_simulate(ptr::null(), 10, 0, TvarInit::Zero, ptr::null(), &mut p) },
        TvarStatus::NullPointer
    );
    assert_eq!(unsafe { tvar_path_len(ptr::null()) }, 0);
    unsafe {
        tvar_curve_free(ptr::null_mut());
        tvar_path_free(ptr::null_mut());
        tvar_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn simulate_estimate_and_correct() {
    let c = constant_curve(&[0.5], 1.0);
    let mut p = ptr::null_mut();
    let s = unsafe { tvar_simulate(c, 2000, 7, TvarInit::Stationary, ptr::null(), &mut p) };
    assert_eq!(s, TvarStatus::Ok);
    assert_eq!(unsafe { tvar_path_len(p) }, 2000);

    let mut xs = vec![0.0; 2000];
    let mut eps = vec![0.0; 2000];
    unsafe {
        assert_eq!(tvar_path_samples(p, xs.as_mut_ptr(), xs.len()), TvarStatus::Ok);
        assert_eq!(tvar_path_innovations(p, eps.as_mut_ptr(), eps.len()), TvarStatus::Ok);
    }
    for k in 1..2000 {
        assert!((xs[k] - 0.5 * xs[k - 1] - eps[k]).abs() < 1e-12);
    }

    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { tvar_nlms_run(p, 0.05, &mut tr) }, TvarStatus::Ok);
    assert_eq!(unsafe { tvar_trajectory_len(tr) }, 2000);
    let mut first = [1.0];
    unsafe { tvar_trajectory_estimate(tr, 0, first.as_mut_ptr(), 1) };
    assert_eq!(first, [0.0]);
    assert_eq!(
        unsafe { tvar_trajectory_estimate(tr, 2001, first.as_mut_ptr(), 1) },
        TvarStatus::Domain
    );

    let mut last = [0.0];
    let mut pointwise = [0.0];
    unsafe {
        tvar_trajectory_estimate(tr, 2000, last.as_mut_ptr(), 1);
        tvar_pointwise_estimate(tr, 1.0, pointwise.as_mut_ptr(), 1);
    }
    assert_eq!(last, pointwise);
    assert!((last[0] - 0.5).abs() < 0.3);

    let mut corrected = [0.0];
    let s = unsafe { tvar_bias_corrected_estimate(p, 0.05, 0.5, 1.0, corrected.as_mut_ptr(), 1) };
    assert_eq!(s, TvarStatus::Ok);
    let mut half = ptr::null_mut();
    unsafe { tvar_nlms_run(p, 0.025, &mut half) };
    let mut b = [0.0];
    unsafe { tvar_pointwise_estimate(half, 1.0, b.as_mut_ptr(), 1) };
    let expect = last[0] + 0.5 * (last[0] - b[0]) / 0.5;
    assert!((corrected[0] - expect).abs() < 1e-14);

    assert_eq!(
        unsafe { tvar_bias_corrected_estimate(p, 0.05, 1.0, 1.0, corrected.as_mut_ptr(), 1) },
        TvarStatus::Validation
    );

    unsafe {
        tvar_trajectory_free(half);
        tvar_trajectory_free(tr);
        tvar_path_free(p);
        tvar_curve_free(c);
    }
}

#[test]
fn explicit_initial_state_is_used() {
    let c = constant_curve(&[0.5], 0.0);
    let x0 = [2.0];
    let mut p = ptr::null_mut();
    unsafe { tvar_simulate(c, 3, 1, TvarInit::Explicit, x0.as_ptr(), &mut p) };
    let mut xs = [0.0; 3];
    unsafe { tvar_path_samples(p, xs.as_mut_ptr(), 3) };
    assert_eq!(xs, [1.0, 0.5, 0.25]);
    unsafe {
        tvar_path_free(p);
        tvar_curve_free(c);
    }
}

#[test]
fn ar1_covariance_and_powers() {
    let theta = [0.5];
    let mut cov = [0.0];
    assert_eq!(
        unsafe { tvar_local_covariance(theta.as_ptr(), 1, 1.0, cov.as_mut_ptr(), 1) },
        TvarStatus::Ok
    );
    assert!((cov[0] - 1.0 / 0.75).abs() < 1e-12);

    let mut rho = 0.0;
    let ar2 = [0.5, -0.06];
    unsafe { tvar_spectral_radius(ar2.as_ptr(), 2, &mut rho) };
    assert!((rho - 0.3).abs() < 1e-12);

    let a = [4.0, 0.0, 0.0, 9.0];
    let mut r = [0.0; 4];
    assert_eq!(
        unsafe { tvar_fractional_power(a.as_ptr(), 2, 0.5, r.as_mut_ptr(), 4) },
        TvarStatus::Ok
    );
    for (got, want) in r.iter().zip([2.0, 0.0, 0.0, 3.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    let not_pd = [1.0, 0.0, 0.0, -1.0];
    assert_ne!(
        unsafe { tvar_fractional_power(not_pd.as_ptr(), 2, 0.5, r.as_mut_ptr(), 4) },
        TvarStatus::Ok
    );
}

#[test]
fn step_rule_matches_formula() {
    let mu = tvar_step_size_rule(1024, 1.0, 0.5);
    assert!((mu - 0.5 * 1024f64.powf(-2.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/tvar.h")).unwrap();
    for name in [
        "tvar_version",
        "tvar_last_error_message",
        "tvar_curve_from_toml",
        "tvar_curve_constant",
        "tvar_curve_eval",
        "tvar_simulate",
        "tvar_nlms_run",
        "tvar_bias_corrected_estimate",
        "tvar_local_covariance",
        "tvar_fractional_power",
        "TVAR_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
