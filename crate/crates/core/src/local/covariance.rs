use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tvar::{spectral_radius, ParamCurve};

pub const DEFAULT_NODES: usize = 1 << 14;
const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMethod {
    YuleWalker,
    Quadrature,
}

impl CovarianceMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CovarianceMethod::YuleWalker => "yule_walker",
            CovarianceMethod::Quadrature => "quadrature",
        }
    }
}

/// Covariance `Σ(t)` of the stationary AR(d) frozen at `(θ(t), σ(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCovariance {
    pub t: Option<f64>,
    pub matrix: DMatrix<f64>,
    pub method: CovarianceMethod,
}

impl LocalCovariance {
    pub fn autocovariances(&self) -> Vec<f64> {
        (0..self.matrix.ncols()).map(|h| self.matrix[(0, h)]).collect()
    }

    /// Row-major dump: header `row,col,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,value")?;
        let d = self.matrix.nrows();
        for i in 0..d {
            for j in 0..d {
                writeln!(w, "{},{},{}", i + 1, j + 1, crate::csv::fmt(self.matrix[(i, j)]))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub lambda: f64,
    pub value: f64,
}

fn require_stable(theta: &[f64]) -> Result<()> {
    let radius = spectral_radius(theta)?;
    if radius >= 1.0 {
        return Err(Error::Stability { radius });
    }
    Ok(())
}

/// `|1 − Σ θ_j e^{iλj}|²`.
fn ar_polynomial_sq(theta: &[f64], lambda: f64) -> f64 {
    let mut p = Complex64::new(1.0, 0.0);
    for (j, th) in theta.iter().enumerate() {
        p -= Complex64::from_polar(*th, lambda * (j + 1) as f64);
    }
    p.norm_sqr()
}

fn density_unchecked(theta: &[f64], sigma: f64, lambda: f64) -> f64 {
    sigma * sigma / (2.0 * PI) / ar_polynomial_sq(theta, lambda)
}

/// `f(λ) = σ²/(2π) · |θ(e^{iλ})|^{−2}`.
pub fn local_spectral_density(theta: &[f64], sigma: f64, lambda: f64) -> Result<f64> {
    if !(-PI..=PI).contains(&lambda) {
        return Err(Error::domain(format!("lambda = {lambda} is outside [−π, π]")));
    }
    require_stable(theta)?;
    Ok(density_unchecked(theta, sigma, lambda))
}

/// The density on `points` equispaced frequencies covering `[−π, π]`.
pub fn spectrum(theta: &[f64], sigma: f64, points: usize) -> Result<Vec<SpectrumSample>> {
    require_stable(theta)?;
    if points < 2 {
        return Err(Error::validation("spectrum needs at least two points"));
    }
    Ok((0..points)
        .map(|i| {
            let lambda = -PI + 2.0 * PI * i as f64 / (points - 1) as f64;
            SpectrumSample {
                lambda,
                value: density_unchecked(theta, sigma, lambda),
            }
        })
        .collect())
}

fn toeplitz(gamma: &[f64]) -> DMatrix<f64> {
    let d = gamma.len();
    DMatrix::from_fn(d, d, |i, j| gamma[i.abs_diff(j)])
}

/// `Σ` from the extended Yule–Walker system.
///
/// Solves for `γ_0..γ_d` in
/// `γ_0 − Σ θ_j γ_j = σ²` and `γ_i − Σ θ_j γ_{|i−j|} = 0` (`i = 1..d`),
/// then assembles the `d × d` Toeplitz matrix from `γ_0..γ_{d−1}`.
pub fn local_covariance_yw(theta: &[f64], sigma: f64) -> Result<LocalCovariance> {
    let d = theta.len();
    if d == 0 {
        return Err(Error::validation("theta must be nonempty"));
    }
    require_stable(theta)?;
    let mut a = DMatrix::<f64>::zeros(d + 1, d + 1);
    for i in 0..=d {
        a[(i, i)] += 1.0;
        for j in 1..=d {
            a[(i, i.abs_diff(j))] -= theta[j - 1];
        }
    }
    let mut b = DVector::<f64>::zeros(d + 1);
    b[0] = sigma * sigma;
    let lu = a.clone().lu();
    let gamma = lu
        .solve(&b)
        .ok_or_else(|| Error::numerical("singular Yule–Walker system", f64::INFINITY))?;
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::numerical("Yule–Walker solution is not finite", f64::INFINITY));
    }
    let residual = (&a * &gamma - &b).amax();
    if residual > 1e-8 * gamma.amax().max(1.0) {
        return Err(Error::numerical("ill-conditioned Yule–Walker system", residual));
    }
    Ok(LocalCovariance {
        t: None,
        matrix: toeplitz(&gamma.as_slice()[..d]),
        method: CovarianceMethod::YuleWalker,
    })
}

/// `Σ_{k,l} = ∫ e^{iλ(k−l)} f(λ) dλ` by the composite trapezoid rule on the
/// periodic interval, with `node_count` nodes.
pub fn local_covariance_quadrature(theta: &[f64], sigma: f64, node_count: usize) -> Result<LocalCovariance> {
    let d = theta.len();
    if d == 0 {
        return Err(Error::validation("theta must be nonempty"));
    }
    if node_count < 256 || !node_count.is_power_of_two() {
        return Err(Error::validation("node_count must be a power of two ≥ 256"));
    }
    require_stable(theta)?;
    let h = 2.0 * PI / node_count as f64;
    let mut re = vec![0.0; d];
    let mut im = vec![0.0; d];
    for j in 0..node_count {
        let lambda = -PI + j as f64 * h;
        let f = density_unchecked(theta, sigma, lambda);
        for lag in 0..d {
            let arg = lambda * lag as f64;
            re[lag] += f * arg.cos();
            im[lag] += f * arg.sin();
        }
    }
    let gamma: Vec<f64> = re.iter().map(|v| v * h).collect();
    let residue = im.iter().fold(0.0f64, |m, v| m.max((v * h).abs()));
    if residue > IMAG_RESIDUE_TOL * gamma[0].abs().max(1.0) {
        return Err(Error::numerical("imaginary residue of covariance quadrature", residue));
    }
    Ok(LocalCovariance {
        t: None,
        matrix: toeplitz(&gamma),
        method: CovarianceMethod::Quadrature,
    })
}

/// `Σ(t, θ, σ)` of a curve, Yule–Walker method.
pub fn local_covariance_at(curve: &ParamCurve, t: f64) -> Result<LocalCovariance> {
    let (theta, sigma) = curve.eval(t)?;
    let mut cov = local_covariance_yw(&theta, sigma)?;
    cov.t = Some(t);
    Ok(cov)
}
