#ifndef TVAR_H
#define TVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result of every fallible call.
 */
typedef enum TvarStatus {
  TVAR_STATUS_OK = 0,
  TVAR_STATUS_NULL_POINTER = 1,
  TVAR_STATUS_VALIDATION = 2,
  TVAR_STATUS_DOMAIN = 3,
  TVAR_STATUS_NUMERICAL = 4,
  TVAR_STATUS_STABILITY = 5,
  TVAR_STATUS_IO = 6,
  TVAR_STATUS_BUFFER_TOO_SMALL = 7,
  TVAR_STATUS_PANIC = 8,
} TvarStatus;

/*
 Initial state used by [`tvar_simulate`].
 */
typedef enum TvarInit {
  TVAR_INIT_ZERO = 0,
  /*
   Stationary law of the AR process frozen at `t = 0`.
   */
  TVAR_INIT_STATIONARY = 1,
  /*
   Caller-supplied `[X_0, X_{-1}, …, X_{-d+1}]`.
   */
  TVAR_INIT_EXPLICIT = 2,
} TvarInit;

/*
 Opaque parameter curve.
 */
typedef struct TvarCurve TvarCurve;

/*
 Opaque simulated path.
 */
typedef struct TvarPath TvarPath;

/*
 Opaque NLMS trajectory.
 */
typedef struct TvarTrajectory TvarTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *tvar_version(void);

/*
 Copies the last error message of the calling thread into `buf`
 (NUL-terminated, truncated to `len - 1` bytes) and returns the full
 message length in bytes, excluding the terminator.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
uintptr_t tvar_last_error_message(char *buf, uintptr_t len);

/*
 Builds a curve from TOML text holding the keys of a `[curve]` table,
 e.g. `kind = "polynomial"`, `coeffs = [[0.1, 0.3]]`, `sigma = 1.0`.

 # Safety
 `text` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
 */
enum TvarStatus tvar_curve_from_toml(const char *text, struct TvarCurve **out);

/*
 Constant coefficients `theta[0..d]` and noise level `sigma`. Coefficients
 whose companion matrix has spectral radius at least 1 are rejected.

 # Safety
 `theta` must point to `d` readable doubles and `out` must be valid.
 */
enum TvarStatus tvar_curve_constant(const double *theta,
                                    uintptr_t d,
                                    double sigma,
                                    struct TvarCurve **out);

/*
 Number of coefficients `d` of the curve (0 for a null handle).

 # Safety
 `curve` must be null or a live handle.
 */
uintptr_t tvar_curve_dimension(const struct TvarCurve *curve);

/*
 Writes `θ(t)` into `theta_out[0..d]` and `σ(t)` into `sigma_out`.

 # Safety
 `curve` must be a live handle, `theta_out` must hold `len` doubles and
 `sigma_out` must be writable.
 */
enum TvarStatus tvar_curve_eval(const struct TvarCurve *curve,
                                double t,
                                double *theta_out,
                                uintptr_t len,
                                double *sigma_out);

/*
 Releases a curve. Null is ignored.

 # Safety
 `curve` must be null or a handle not yet freed.
 */
void tvar_curve_free(struct TvarCurve *curve);

/*
 Simulates `n` samples with Gaussian innovations.

 `x0` is read only for [`TvarInit::Explicit`] and must then hold `d`
 values.

 # Safety
 `curve` must be a live handle, `x0` as described, `out` valid.
 */
enum TvarStatus tvar_simulate(const struct TvarCurve *curve,
                              uintptr_t n,
                              uint64_t seed,
                              enum TvarInit init,
                              const double *x0,
                              struct TvarPath **out);

/*
 Number of samples `n` (0 for a null handle).

 # Safety
 `path` must be null or a live handle.
 */
uintptr_t tvar_path_len(const struct TvarPath *path);

/*
 Copies `X_1..X_n` into `out[0..n]`.

 # Safety
 `path` must be a live handle and `out` must hold `len` doubles.
 */
enum TvarStatus tvar_path_samples(const struct TvarPath *path, double *out, uintptr_t len);

/*
 Copies the normalized innovations `ε_1..ε_n` into `out[0..n]`.

 # Safety
 `path` must be a live handle and `out` must hold `len` doubles.
 */
enum TvarStatus tvar_path_innovations(const struct TvarPath *path, double *out, uintptr_t len);

/*
 Releases a path. Null is ignored.

 # Safety
 `path` must be null or a handle not yet freed.
 */
void tvar_path_free(struct TvarPath *path);

/*
 Runs NLMS with step size `mu` over the whole path.

 # Safety
 `path` must be a live handle and `out` valid.
 */
enum TvarStatus tvar_nlms_run(const struct TvarPath *path, double mu, struct TvarTrajectory **out);

/*
 Number of NLMS steps `n`; the trajectory holds `n + 1` estimates.

 # Safety
 `traj` must be null or a live handle.
 */
uintptr_t tvar_trajectory_len(const struct TvarTrajectory *traj);

/*
 Copies `θ̂_k` into `out[0..d]`.

 # Safety
 `traj` must be a live handle and `out` must hold `len` doubles.
 */
enum TvarStatus tvar_trajectory_estimate(const struct TvarTrajectory *traj,
                                         uintptr_t k,
                                         double *out,
                                         uintptr_t len);

/*
 Copies `θ̂_{[tn]}` into `out[0..d]` for `t ∈ (0, 1]`.

 # Safety
 `traj` must be a live handle and `out` must hold `len` doubles.
 */
enum TvarStatus tvar_pointwise_estimate(const struct TvarTrajectory *traj,
                                        double t,
                                        double *out,
                                        uintptr_t len);

/*
 Releases a trajectory. Null is ignored.

 # Safety
 `traj` must be null or a handle not yet freed.
 */
void tvar_trajectory_free(struct TvarTrajectory *traj);

/*
 Romberg-corrected estimate `(θ̂(μ) − γ θ̂(γμ)) / (1 − γ)` at `t`.

 # Safety
 `path` must be a live handle and `out` must hold `len` doubles.
 */
enum TvarStatus tvar_bias_corrected_estimate(const struct TvarPath *path,
                                             double mu,
                                             double gamma,
                                             double t,
                                             double *out,
                                             uintptr_t len);

/*
 Minimax step size `alpha · n^{-2 beta / (1 + 2 beta)}`.
 */
double tvar_step_size_rule(uintptr_t n, double beta, double alpha);

/*
 Largest modulus among the companion-matrix eigenvalues of `theta[0..d]`.

 # Safety
 `theta` must hold `d` doubles and `out` must be writable.
 */
enum TvarStatus tvar_spectral_radius(const double *theta, uintptr_t d, double *out);

/*
 Stationary covariance `Σ` of the AR(d) process with coefficients
 `theta[0..d]` and noise level `sigma`, written row-major to `out[0..d*d]`.

 # Safety
 `theta` must hold `d` doubles and `out` must hold `len` doubles.
 */
enum TvarStatus tvar_local_covariance(const double *theta,
                                      uintptr_t d,
                                      double sigma,
                                      double *out,
                                      uintptr_t len);

/*
 `A^alpha` for a symmetric positive-definite `d × d` matrix, row-major.

 # Safety
 `a` must hold `d*d` doubles and `out` must hold `len` doubles.
 */
enum TvarStatus tvar_fractional_power(const double *a,
                                      uintptr_t d,
                                      double alpha,
                                      double *out,
                                      uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TVAR_H */
