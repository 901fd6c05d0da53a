//! C interface to the `tvar` library.
//!
//! Objects cross the boundary as opaque handles (`TvarCurve`, `TvarPath`,
//! `TvarTrajectory`) that the caller releases with the matching `*_free`
//! function. Every fallible call returns a [`TvarStatus`]; the message of the
//! most recent failure on the calling thread is available through
//! [`tvar_last_error_message`]. Matrices are row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::DMatrix;
use tvar::local::{fractional_power, local_covariance_yw};
use tvar::nlms::{bias_corrected_estimate, nlms_run, pointwise_estimate, NLMSTrajectory};
use tvar::risk::step_size_rule;
use tvar::tvar::{simulate, spectral_radius, InitialCondition, InnovationSpec, ParamCurve, TVARPath};
use tvar::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvarStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Domain = 3,
    Numerical = 4,
    Stability = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Initial state used by [`tvar_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvarInit {
    Zero = 0,
    /// Stationary law of the AR process frozen at `t = 0`.
    Stationary = 1,
    /// Caller-supplied `[X_0, X_{-1}, …, X_{-d+1}]`.
    Explicit = 2,
}

/// Opaque parameter curve.
pub struct TvarCurve {
    inner: ParamCurve,
}

/// Opaque simulated path.
pub struct TvarPath {
    inner: TVARPath,
}

/// Opaque NLMS trajectory.
pub struct TvarTrajectory {
    inner: NLMSTrajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> TvarStatus {
    match err {
        Error::Domain(_) => TvarStatus::Domain,
        Error::Validation(_) => TvarStatus::Validation,
        Error::Numerical { .. } => TvarStatus::Numerical,
        Error::Stability { .. } => TvarStatus::Stability,
        Error::Io(_) => TvarStatus::Io,
        Error::Replicate { source, .. } => status_of(source),
    }
}

enum Failure {
    Status(TvarStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(TvarStatus::NullPointer, "null pointer argument".into())
}

fn short(needed: usize, got: usize) -> Failure {
    Failure::Status(
        TvarStatus::BufferTooSmall,
        format!("output buffer holds {got} values, {needed} needed"),
    )
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TvarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TvarStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TvarStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null());
    }
    if len < needed {
        return Err(short(needed, len));
    }
    Ok(slice::from_raw_parts_mut(p, needed))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tvar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of the calling thread into `buf`
/// (NUL-terminated, truncated to `len - 1` bytes) and returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tvar_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a curve from TOML text holding the keys of a `[curve]` table,
/// e.g. `kind = "polynomial"`, `coeffs = [[0.1, 0.3]]`, `sigma = 1.0`.
///
/// # Safety
/// `text` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tvar_curve_from_toml(text: *const c_char, out: *mut *mut TvarCurve) -> TvarStatus {
    guard(|| {
        if text.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure::Status(TvarStatus::Validation, format!("curve text is not UTF-8: {e}")))?;
        let curve = tvar::cli::parse_curve_toml(text)
            .map_err(|e| Failure::Status(TvarStatus::Validation, e.messages.join("; ")))?;
        store(out, TvarCurve { inner: curve })
    })
}

/// Constant coefficients `theta[0..d]` and noise level `sigma`. Coefficients
/// whose companion matrix has spectral radius at least 1 are rejected.
///
/// # Safety
/// `theta` must point to `d` readable doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tvar_curve_constant(
    theta: *const f64,
    d: usize,
    sigma: f64,
    out: *mut *mut TvarCurve,
) -> TvarStatus {
    guard(|| {
        let theta = input(theta, d)?.to_vec();
        let radius = spectral_radius(&theta)?;
        if radius >= 1.0 {
            return Err(Failure::Lib(Error::Stability { radius }));
        }
        store(
            out,
            TvarCurve {
                inner: ParamCurve::constant(theta, sigma)?,
            },
        )
    })
}

/// Number of coefficients `d` of the curve (0 for a null handle).
///
/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvar_curve_dimension(curve: *const TvarCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.inner.d)
}

/// Writes `θ(t)` into `theta_out[0..d]` and `σ(t)` into `sigma_out`.
///
/// # Safety
/// `curve` must be a live handle, `theta_out` must hold `len` doubles and
/// `sigma_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvar_curve_eval(
    curve: *const TvarCurve,
    t: f64,
    theta_out: *mut f64,
    len: usize,
    sigma_out: *mut f64,
) -> TvarStatus {
    guard(|| {
        let curve = &handle(curve)?.inner;
        if sigma_out.is_null() {
            return Err(null());
        }
        let out = output(theta_out, len, curve.d)?;
        let (theta, sigma) = curve.eval(t)?;
        out.copy_from_slice(&theta);
        *sigma_out = sigma;
        Ok(())
    })
}

/// Releases a curve. Null is ignored.
///
/// # Safety
/// `curve` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvar_curve_free(curve: *mut TvarCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Simulates `n` samples with Gaussian innovations.
///
/// `x0` is read only for [`TvarInit::Explicit`] and must then hold `d`
/// values.
///
/// # Safety
/// `curve` must be a live handle, `x0` as described, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tvar_simulate(
    curve: *const TvarCurve,
    n: usize,
    seed: u64,
    init: TvarInit,
    x0: *const f64,
    out: *mut *mut TvarPath,
) -> TvarStatus {
    guard(|| {
        let curve = &handle(curve)?.inner;
        let init = match init {
            TvarInit::Zero => InitialCondition::Zero,
            TvarInit::Stationary => InitialCondition::StationaryAtZero,
            TvarInit::Explicit => InitialCondition::Explicit(input(x0, curve.d)?.to_vec()),
        };
        let path = simulate(curve, n, &InnovationSpec::gaussian(), seed, &init)?;
        store(out, TvarPath { inner: path })
    })
}

/// Number of samples `n` (0 for a null handle).
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvar_path_len(path: *const TvarPath) -> usize {
    path.as_ref().map_or(0, |p| p.inner.n)
}

/// Copies `X_1..X_n` into `out[0..n]`.
///
/// # Safety
/// `path` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tvar_path_samples(path: *const TvarPath, out: *mut f64, len: usize) -> TvarStatus {
    guard(|| {
        let p = &handle(path)?.inner;
        output(out, len, p.n)?.copy_from_slice(&p.samples);
        Ok(())
    })
}

/// Copies the normalized innovations `ε_1..ε_n` into `out[0..n]`.
///
/// # Safety
/// `path` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tvar_path_innovations(path: *const TvarPath, out: *mut f64, len: usize) -> TvarStatus {
    guard(|| {
        let p = &handle(path)?.inner;
        output(out, len, p.n)?.copy_from_slice(&p.innovations);
        Ok(())
    })
}

/// Releases a path. Null is ignored.
///
/// # Safety
/// `path` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvar_path_free(path: *mut TvarPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Runs NLMS with step size `mu` over the whole path.
///
/// # Safety
/// `path` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tvar_nlms_run(path: *const TvarPath, mu: f64, out: *mut *mut TvarTrajectory) -> TvarStatus {
    guard(|| {
        let p = &handle(path)?.inner;
        store(out, TvarTrajectory { inner: nlms_run(p, mu)? })
    })
}

/// Number of NLMS steps `n`; the trajectory holds `n + 1` estimates.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvar_trajectory_len(traj: *const TvarTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.n())
}

/// Copies `θ̂_k` into `out[0..d]`.
///
/// # Safety
/// `traj` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tvar_trajectory_estimate(
    traj: *const TvarTrajectory,
    k: usize,
    out: *mut f64,
    len: usize,
) -> TvarStatus {
    guard(|| {
        let tr = &handle(traj)?.inner;
        if k > tr.n() {
            return Err(Failure::Lib(Error::Domain(format!(
                "index {k} exceeds trajectory length {}",
                tr.n()
            ))));
        }
        output(out, len, tr.d)?.copy_from_slice(tr.estimate(k));
        Ok(())
    })
}

/// Copies `θ̂_{[tn]}` into `out[0..d]` for `t ∈ (0, 1]`.
///
/// # Safety
/// `traj` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tvar_pointwise_estimate(
    traj: *const TvarTrajectory,
    t: f64,
    out: *mut f64,
    len: usize,
) -> TvarStatus {
    guard(|| {
        let tr = &handle(traj)?.inner;
        let est = pointwise_estimate(tr, t, tr.n())?;
        output(out, len, tr.d)?.copy_from_slice(&est);
        Ok(())
    })
}

/// Releases a trajectory. Null is ignored.
///
/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvar_trajectory_free(traj: *mut TvarTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Romberg-corrected estimate `(θ̂(μ) − γ θ̂(γμ)) / (1 − γ)` at `t`.
///
/// # Safety
/// `path` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tvar_bias_corrected_estimate(
    path: *const TvarPath,
    mu: f64,
    gamma: f64,
    t: f64,
    out: *mut f64,
    len: usize,
) -> TvarStatus {
    guard(|| {
        let p = &handle(path)?.inner;
        let est = bias_corrected_estimate(p, mu, gamma, t)?;
        output(out, len, p.d())?.copy_from_slice(&est);
        Ok(())
    })
}

/// Minimax step size `alpha · n^{-2 beta / (1 + 2 beta)}`.
#[no_mangle]
pub extern "C" fn tvar_step_size_rule(n: usize, beta: f64, alpha: f64) -> f64 {
    step_size_rule(n, beta, alpha)
}

/// Largest modulus among the companion-matrix eigenvalues of `theta[0..d]`.
///
/// # Safety
/// `theta` must hold `d` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvar_spectral_radius(theta: *const f64, d: usize, out: *mut f64) -> TvarStatus {
    guard(|| {
        let theta = input(theta, d)?;
        if out.is_null() {
            return Err(null());
        }
        *out = spectral_radius(theta)?;
        Ok(())
    })
}

/// Stationary covariance `Σ` of the AR(d) process with coefficients
/// `theta[0..d]` and noise level `sigma`, written row-major to `out[0..d*d]`.
///
/// # Safety
/// `theta` must hold `d` doubles and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tvar_local_covariance(
    theta: *const f64,
    d: usize,
    sigma: f64,
    out: *mut f64,
    len: usize,
) -> TvarStatus {
    guard(|| {
        let theta = input(theta, d)?;
        let cov = local_covariance_yw(theta, sigma)?;
        let out = output(out, len, d * d)?;
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = cov.matrix[(i, j)];
            }
        }
        Ok(())
    })
}

/// `A^alpha` for a symmetric positive-definite `d × d` matrix, row-major.
///
/// # Safety
/// `a` must hold `d*d` doubles and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tvar_fractional_power(
    a: *const f64,
    d: usize,
    alpha: f64,
    out: *mut f64,
    len: usize,
) -> TvarStatus {
    guard(|| {
        let a = DMatrix::from_row_slice(d, d, input(a, d * d)?);
        let p = fractional_power(&a, alpha)?;
        let out = output(out, len, d * d)?;
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = p[(i, j)];
            }
        }
        Ok(())
    })
}
