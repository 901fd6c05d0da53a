//! Local stationary approximation: spectral density, local covariance,
//! fractional matrix powers, and the empirical covariance approximation check.

mod approx;
mod covariance;
mod power;

pub use approx::{covariance_approx_error, CovarianceApproxPoint, CovarianceCheck, CovarianceEstimator};
pub use covariance::{
    local_covariance_at, local_covariance_quadrature, local_covariance_yw, local_spectral_density,
    spectrum, CovarianceMethod, LocalCovariance, SpectrumSample, DEFAULT_NODES,
};
pub use power::fractional_power;
