//! Polynomial root finding for autoregressive polynomials.
//!
//! The eigenvalues of the companion matrix of `θ` are the roots of the monic
//! polynomial `z^d − θ₁ z^{d−1} − … − θ_d`, i.e. the reciprocals of the zeros
//! of the autoregressive polynomial `1 − Σ θ_j z^j`. They are found with
//! Aberth–Ehrlich simultaneous iteration; a Schur decomposition of the
//! companion matrix is the fallback.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ROOT_ITERATION_BUDGET: usize = 200;
pub const ROOT_RESIDUAL_TARGET: f64 = 1e-12;

/// Outcome of a root solve, with the method that produced it.
#[derive(Debug, Clone)]
pub struct Roots {
    pub roots: Vec<Complex64>,
    pub iterations: usize,
    pub max_residual: f64,
    pub used_fallback: bool,
}

/// Evaluates the monic polynomial with coefficients `[1, a₁, …, a_d]` and its
/// derivative at `z` (Horner).
fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(coeffs[0], 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in &coeffs[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Relative residual `|p(z)| / Σ|a_k||z|^k`.
fn relative_residual(coeffs: &[f64], z: Complex64) -> f64 {
    let (p, _) = horner(coeffs, z);
    let r = z.norm();
    let mut scale = 0.0;
    for &c in coeffs {
        scale = scale * r + c.abs();
    }
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

fn aberth(coeffs: &[f64]) -> (Vec<Complex64>, usize, f64, bool) {
    let d = coeffs.len() - 1;
    // Cauchy bound on root moduli.
    let bound = 1.0 + coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64) / (d as f64) + 0.4;
            Complex64::from_polar(0.5 * bound, angle)
        })
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < ROOT_ITERATION_BUDGET {
        iterations += 1;
        let mut max_step: f64 = 0.0;
        for i in 0..d {
            let (p, dp) = horner(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..d {
                if j != i {
                    repulsion += (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1e-300));
            }
        }
        let worst = z
            .iter()
            .map(|&zi| relative_residual(coeffs, zi))
            .fold(0.0, f64::max);
        if worst <= ROOT_RESIDUAL_TARGET && max_step <= 1e-14 {
            converged = true;
            break;
        }
        if worst <= ROOT_RESIDUAL_TARGET * 1e-3 {
            converged = true;
            break;
        }
    }
    let worst = z
        .iter()
        .map(|&zi| relative_residual(coeffs, zi))
        .fold(0.0, f64::max);
    if worst <= ROOT_RESIDUAL_TARGET {
        converged = true;
    }
    (z, iterations, worst, converged)
}

fn companion_eigenvalues(coeffs: &[f64]) -> Option<Vec<Complex64>> {
    let d = coeffs.len() - 1;
    let mut c = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        c[(0, j)] = -coeffs[j + 1];
    }
    for i in 1..d {
        c[(i, i - 1)] = 1.0;
    }
    let schur = nalgebra::Schur::try_new(c, 1e-15, 10_000)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Roots of the monic polynomial `z^d − θ₁ z^{d−1} − … − θ_d`.
///
/// Trailing zero coefficients are deflated as exact zero roots.
pub fn companion_roots(theta: &[f64]) -> Result<Roots> {
    let mut trailing_zeros = 0;
    let mut active = theta.len();
    while active > 0 && theta[active - 1] == 0.0 {
        active -= 1;
        trailing_zeros += 1;
    }
    let mut roots = vec![Complex64::new(0.0, 0.0); trailing_zeros];
    if active == 0 {
        return Ok(Roots {
            roots,
            iterations: 0,
            max_residual: 0.0,
            used_fallback: false,
        });
    }
    let mut coeffs = Vec::with_capacity(active + 1);
    coeffs.push(1.0);
    coeffs.extend(theta[..active].iter().map(|t| -t));
    if active == 1 {
        roots.push(Complex64::new(-coeffs[1], 0.0));
        return Ok(Roots {
            roots,
            iterations: 0,
            max_residual: 0.0,
            used_fallback: false,
        });
    }

    let (found, iterations, residual, converged) = aberth(&coeffs);
    if converged {
        roots.extend(found);
        return Ok(Roots {
            roots,
            iterations,
            max_residual: residual,
            used_fallback: false,
        });
    }
    log::debug!("Aberth iteration stalled at residual {residual:e}; using companion eigenvalues");
    let eig = companion_eigenvalues(&coeffs).ok_or_else(|| {
        Error::numerical(
            format!("root finder did not converge within {ROOT_ITERATION_BUDGET} iterations"),
            residual,
        )
    })?;
    let fallback_residual = eig
        .iter()
        .map(|&zi| relative_residual(&coeffs, zi))
        .fold(0.0, f64::max);
    if !fallback_residual.is_finite() || fallback_residual > 1e-8 {
        return Err(Error::numerical(
            "root finder and companion eigenvalue fallback both failed",
            fallback_residual.min(residual),
        ));
    }
    roots.extend(eig);
    Ok(Roots {
        roots,
        iterations,
        max_residual: fallback_residual,
        used_fallback: true,
    })
}

/// Coefficients `c₀..c_m` of `∏ (1 − λ_k z)`, with `c₀ = 1`.
pub fn expand_reciprocal_product(lambdas: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &l in lambdas {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= l * ci;
        }
        c = next;
    }
    c
}
