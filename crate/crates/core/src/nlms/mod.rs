//! The normalized LMS recursion
//!
//! `θ̂_{k+1} = θ̂_k + μ (X_{k+1} − θ̂_kᵀ X_k) X_k / (1 + μ|X_k|²)`, `θ̂_0 = 0`,
//!
//! its pointwise estimate, the two-step-size bias-corrected estimate, and the
//! exact transient / noise / drift decomposition of the tracking error.

mod decomposition;
mod recursion;

pub use decomposition::{error_decomposition, ErrorDecomposition};
pub use recursion::{
    bias_corrected_estimate, estimate_index, nlms_estimates_at, nlms_run, nlms_step, nlms_step_in_place,
    normalized_gain, pointwise_estimate, romberg_combine, NLMSTrajectory,
};
