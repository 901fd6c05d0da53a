//! Grid certificates for the stability and smoothness classes.
//!
//! All checks evaluate the curve on the uniform grid `t_i = i/(grid_size−1)`
//! and certify the property over that grid only.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::vec_norm;
use crate::poly::companion_roots;
use crate::tvar::curve::ParamCurve;

pub const DEFAULT_GRID: usize = 1024;

/// Relative slack used when comparing a computed radius to a bound; matches
/// the accuracy of the root finder.
pub const RADIUS_RELATIVE_SLACK: f64 = 1e-10;

/// Companion matrix: first row `θ`, ones on the subdiagonal.
pub fn companion(theta: &[f64]) -> DMatrix<f64> {
    let d = theta.len();
    let mut m = DMatrix::zeros(d, d);
    for (j, v) in theta.iter().enumerate() {
        m[(0, j)] = *v;
    }
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    m
}

/// Largest eigenvalue modulus of the companion matrix of `θ`, i.e. the
/// largest reciprocal zero modulus of `1 − Σ θ_j z^j`.
pub fn spectral_radius(theta: &[f64]) -> Result<f64> {
    if theta.is_empty() {
        return Err(Error::validation("spectral radius needs d ≥ 1"));
    }
    if theta.len() == 1 {
        return Ok(theta[0].abs());
    }
    let roots = companion_roots(theta)?;
    Ok(roots.roots.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub member: bool,
    pub worst_radius: f64,
    pub worst_t: f64,
    pub grid_size: usize,
}

fn grid(grid_size: usize) -> Result<impl Iterator<Item = f64>> {
    if grid_size < 2 {
        return Err(Error::validation("grid_size must be at least 2"));
    }
    let last = (grid_size - 1) as f64;
    Ok((0..grid_size).map(move |i| i as f64 / last))
}

/// Membership certificate for `S(ρ)` over the grid.
pub fn check_stability_class(curve: &ParamCurve, rho: f64, grid_size: usize) -> Result<StabilityReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::validation("rho must lie in (0,1)"));
    }
    let mut worst_radius = -1.0;
    let mut worst_t = 0.0;
    for t in grid(grid_size)? {
        let r = spectral_radius(&curve.theta_at(t)?)?;
        if r > worst_radius {
            worst_radius = r;
            worst_t = t;
        }
    }
    Ok(StabilityReport {
        member: worst_radius <= rho * (1.0 + RADIUS_RELATIVE_SLACK),
        worst_radius,
        worst_t,
        grid_size,
    })
}

/// Grid lower bound on the β-Lipschitz semi-norm
/// `sup_{s≠t} |θ(t) − θ(s)| / |t − s|^β`.
pub fn lipschitz_seminorm(curve: &ParamCurve, beta: f64, grid_size: usize) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::validation("beta must lie in (0,1]"));
    }
    let points: Vec<(f64, Vec<f64>)> = grid(grid_size)?
        .map(|t| curve.theta_at(t).map(|v| (t, v)))
        .collect::<Result<_>>()?;
    let mut best: f64 = 0.0;
    let mut diff = vec![0.0; curve.d];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            for (k, slot) in diff.iter_mut().enumerate() {
                *slot = points[j].1[k] - points[i].1[k];
            }
            let ratio = vec_norm(&diff) / (points[j].0 - points[i].0).powf(beta);
            best = best.max(ratio);
        }
    }
    Ok(best)
}

/// Radii `(a, b)` with `B(a) ⊆ S(ρ) ⊆ B(b)`:
/// `a = 1/√(ρ^{−2} + … + ρ^{−2d})`, `b = (1 + ρ)^d − 1`.
pub fn stability_ball_radii(rho: f64, d: usize) -> (f64, f64) {
    let inner = 1.0 / (1..=d).map(|k| rho.powi(-2 * k as i32)).sum::<f64>().sqrt();
    let outer = (1.0 + rho).powi(d as i32) - 1.0;
    (inner, outer)
}
