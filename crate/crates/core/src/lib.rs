//! Time-varying autoregressive (TVAR) processes, NLMS tracking of their
//! coefficients, Romberg bias correction and a seeded Monte Carlo harness for
//! pointwise risk.
//!
//! The crate is organised bottom-up:
//!
//! * [`tvar`]: parameter curves, stability checks, innovations and simulation
//! * [`local`]: local spectral density, local covariance `Σ(t)` and fractional
//!   matrix powers
//! * [`nlms`]: the normalized LMS recursion, pointwise and Romberg estimates,
//!   error decomposition
//! * [`risk`]: Monte Carlo MSEM, rate fits and expansion checks
//! * [`cli`]: the batch front-end used by the `tvar` binary

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod csv;
pub mod error;
pub mod linalg;
pub mod local;
pub mod nlms;
pub mod par;
pub mod poly;
pub mod risk;
pub mod rng;
pub mod tvar;

pub use error::{Error, Result};
