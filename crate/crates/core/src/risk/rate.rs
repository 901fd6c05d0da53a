use crate::error::{Error, Result};

use super::montecarlo::RiskReport;

/// Least-squares line through `(log n, log risk)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope from the regression residuals.
    pub slope_se: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fits `log risk = intercept + slope · log n` (natural logarithms).
///
/// Needs at least four points whose `n` values span two octaves.
pub fn rate_fit(data: &[(f64, f64)]) -> Result<RateFit> {
    if data.len() < 4 {
        return Err(Error::validation(format!(
            "a rate fit needs at least 4 points, got {}",
            data.len()
        )));
    }
    if let Some(&(n, r)) = data.iter().find(|(n, r)| !(*n > 0.0 && *r > 0.0 && r.is_finite())) {
        return Err(Error::validation(format!("rate fit point (n = {n}, risk = {r}) is not positive")));
    }
    let lo = data.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < 4.0 * (1.0 - 1e-12) {
        return Err(Error::validation(format!(
            "n values span {lo}..{hi}, fewer than two octaves"
        )));
    }
    let points: Vec<(f64, f64)> = data.iter().map(|&(n, r)| (n.ln(), r.ln())).collect();
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = (sse / (k - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        points,
    })
}

/// Rate fit of the `L²` risk at evaluation point `t` across the report's `n`
/// values.
pub fn rate_fit_report(report: &RiskReport, t: f64) -> Result<RateFit> {
    let data: Vec<(f64, f64)> = report
        .entries
        .iter()
        .filter(|e| e.t == t)
        .map(|e| (e.n as f64, e.l2_risk))
        .collect();
    rate_fit(&data)
}
