use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::linalg::operator_norm;
use crate::local::{fractional_power, local_covariance_at};
use crate::par::map_indexed;

use super::montecarlo::{collect_errors, RiskEntry};
use super::scenario::Scenario;

/// Local power-law description of the curve at the evaluation points:
/// `θ(u) − θ(t) ≈ θ_{t,β} (t − u)^β` with remainder of order `(t − u)^{β'}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSettings {
    pub theta_t_beta: Vec<f64>,
    pub beta: f64,
    /// Defaults to `β + 1` when absent.
    pub beta_prime: Option<f64>,
}

/// Empirical bias and covariance against their predicted main terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionEntry {
    pub n: usize,
    pub t: f64,
    pub mu: f64,
    /// `Γ(β+1) (μn)^{−β} Σ(t)^{−β} θ_{t,β}`.
    pub predicted_bias: Vec<f64>,
    pub empirical_bias: Vec<f64>,
    pub bias_se: Vec<f64>,
    /// Euclidean norm of `empirical_bias − predicted_bias`.
    pub bias_residual: f64,
    /// `μ σ²(t) / 2`.
    pub predicted_variance: f64,
    /// Operator norm of `cov_unbiased − μσ²(t)/2 · I`.
    pub cov_residual: f64,
    /// `|MSEM(θ̂ − predicted_bias) − μσ²(t)/2 · I|^{1/2}`.
    pub centered_msem_residual: f64,
    /// `√μ (√μ + (μn)^{−β/2})`.
    pub scale_noise: f64,
    /// `(μn)^{−2β}`.
    pub scale_bias_squared: f64,
    /// `(μn)^{−β'}`.
    pub scale_smoothness: f64,
    /// `(μn)^{−β} √μ`.
    pub scale_cross: f64,
}

impl ExpansionEntry {
    pub fn remainder_scale(&self) -> f64 {
        self.scale_noise + self.scale_bias_squared + self.scale_smoothness + self.scale_cross
    }
}

fn settings_check(scenario: &Scenario, settings: &ExpansionSettings) -> Result<f64> {
    if settings.theta_t_beta.len() != scenario.curve.d {
        return Err(Error::validation(format!(
            "theta_t_beta has length {}, expected {}",
            settings.theta_t_beta.len(),
            scenario.curve.d
        )));
    }
    if !(settings.beta > 0.0) {
        return Err(Error::validation("beta must be positive"));
    }
    let beta_prime = settings.beta_prime.unwrap_or(settings.beta + 1.0);
    if !(beta_prime > settings.beta) {
        return Err(Error::validation("beta_prime must exceed beta"));
    }
    Ok(beta_prime)
}

/// Compares the NLMS Monte Carlo bias and covariance with their first-order
/// predictions at every `(n, t)` of the scenario.
pub fn msem_expansion_check(
    scenario: &Scenario,
    settings: &ExpansionSettings,
    workers: usize,
) -> Result<Vec<ExpansionEntry>> {
    let beta_prime = settings_check(scenario, settings)?;
    let beta = settings.beta;
    let table = collect_errors(scenario, workers, false)?;
    let theta_vec = DVector::from_column_slice(&settings.theta_t_beta);
    let gamma_factor = gamma(beta + 1.0);
    let d = scenario.curve.d;
    let mut out = Vec::new();
    for (ni, &n) in table.n_list.iter().enumerate() {
        let mu = table.mus[ni];
        let mu_n = mu * n as f64;
        for (ti, &t) in table.t_points.iter().enumerate() {
            let sigma_t = local_covariance_at(&scenario.curve, t)?.matrix;
            let power = fractional_power(&sigma_t, -beta)?;
            let predicted: Vec<f64> = (power * &theta_vec * (gamma_factor * mu_n.powf(-beta)))
                .iter()
                .copied()
                .collect();
            let errors = &table.nlms[ni][ti];
            let entry = RiskEntry::from_errors(n, t, mu, errors);
            let s2 = scenario.curve.sigma_at(t)?.powi(2);
            let main = mu * s2 / 2.0;
            let identity = DMatrix::<f64>::identity(d, d) * main;
            let cov_residual = operator_norm(&(&entry.cov_unbiased - &identity));
            let shifted: Vec<Vec<f64>> = errors
                .iter()
                .map(|e| e.iter().zip(&predicted).map(|(a, b)| a - b).collect())
                .collect();
            let centered = RiskEntry::from_errors(n, t, mu, &shifted);
            let centered_msem_residual = operator_norm(&(&centered.msem - &identity)).sqrt();
            let bias_residual = entry
                .bias
                .iter()
                .zip(&predicted)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            out.push(ExpansionEntry {
                n,
                t,
                mu,
                predicted_bias: predicted,
                empirical_bias: entry.bias.clone(),
                bias_se: entry.bias_se.clone(),
                bias_residual,
                predicted_variance: main,
                cov_residual,
                centered_msem_residual,
                scale_noise: mu.sqrt() * (mu.sqrt() + mu_n.powf(-beta / 2.0)),
                scale_bias_squared: mu_n.powf(-2.0 * beta),
                scale_smoothness: mu_n.powf(-beta_prime),
                scale_cross: mu_n.powf(-beta) * mu.sqrt(),
            });
        }
    }
    Ok(out)
}

/// Centered and uncentered NLMS risks at one `(n, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredRiskEntry {
    pub n: usize,
    pub t: f64,
    pub mu: f64,
    /// `(μn)^{−1} Σ(t)^{−1} θ̇(t)`, added to every error.
    pub centering: Vec<f64>,
    pub centered: RiskEntry,
    pub uncentered: RiskEntry,
    /// Mean of `|e + c|² − |e|²` over replicates, with its standard error.
    pub squared_gain: f64,
    pub squared_gain_se: f64,
    /// `√μ + (μn)^{−β} + (μn)^{−2}` with the curve's declared `β`.
    pub bound_scale: f64,
}

/// Risk of `θ̂ − θ(t) + (μn)^{−1} Σ(t)^{−1} θ̇(t)` next to the plain risk, on
/// the same replicates.
///
/// Fails with a validation error when the curve has no closed-form
/// derivative.
pub fn centered_risk(scenario: &Scenario, workers: usize) -> Result<Vec<CenteredRiskEntry>> {
    let curve = &scenario.curve;
    let offsets: Vec<DVector<f64>> = scenario
        .t_points
        .iter()
        .map(|&t| {
            let deriv = DVector::from_vec(curve.derivative(t)?);
            let sigma_t = local_covariance_at(curve, t)?.matrix;
            sigma_t
                .lu()
                .solve(&deriv)
                .ok_or_else(|| Error::numerical("local covariance is singular", f64::INFINITY))
        })
        .collect::<Result<_>>()?;
    let table = collect_errors(scenario, workers, false)?;
    let beta = curve.declared_beta;
    let cells: Vec<(usize, usize)> = (0..table.n_list.len())
        .flat_map(|ni| (0..table.t_points.len()).map(move |ti| (ni, ti)))
        .collect();
    map_indexed(1, cells.len(), |c| {
        let (ni, ti) = cells[c];
        let n = table.n_list[ni];
        let t = table.t_points[ti];
        let mu = table.mus[ni];
        let mu_n = mu * n as f64;
        let centering: Vec<f64> = offsets[ti].iter().map(|v| v / mu_n).collect();
        let errors = &table.nlms[ni][ti];
        let shifted: Vec<Vec<f64>> = errors
            .iter()
            .map(|e| e.iter().zip(&centering).map(|(a, b)| a + b).collect())
            .collect();
        let gains: Vec<f64> = errors
            .iter()
            .zip(&shifted)
            .map(|(e, s)| s.iter().map(|v| v * v).sum::<f64>() - e.iter().map(|v| v * v).sum::<f64>())
            .collect();
        let gain_entry = RiskEntry::from_errors(n, t, mu, &gains.iter().map(|g| vec![*g]).collect::<Vec<_>>());
        Ok(CenteredRiskEntry {
            n,
            t,
            mu,
            centering,
            centered: RiskEntry::from_errors(n, t, mu, &shifted),
            uncentered: RiskEntry::from_errors(n, t, mu, errors),
            squared_gain: gain_entry.bias[0],
            squared_gain_se: gain_entry.bias_se[0],
            bound_scale: mu.sqrt() + mu_n.powf(-beta) + mu_n.powi(-2),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::MuRule;
    use crate::tvar::ParamCurve;

    #[test]
    fn constant_curve_predicts_zero_bias() {
        let c = ParamCurve::constant(vec![0.5], 1.0).unwrap();
        let mut s = Scenario::new(c, vec![20000], vec![1.0], MuRule::Fixed(0.002));
        s.replicates = 200;
        let settings = ExpansionSettings {
            theta_t_beta: vec![0.0],
            beta: 1.0,
            beta_prime: None,
        };
        let out = msem_expansion_check(&s, &settings, 0).unwrap();
        let e = &out[0];
        assert_eq!(e.predicted_bias, vec![0.0]);
        assert!(e.bias_residual < 4.0 * e.bias_se[0], "{e:?}");
        assert!((e.predicted_variance - 0.001).abs() < 1e-15);
        assert!(e.bias_residual < e.remainder_scale());
    }

    #[test]
    fn centering_is_a_no_op_for_constant_curves() {
        let c = ParamCurve::constant(vec![0.5], 1.0).unwrap();
        let mut s = Scenario::new(c, vec![500], vec![1.0], MuRule::Fixed(0.05));
        s.replicates = 20;
        let out = centered_risk(&s, 1).unwrap();
        assert_eq!(out[0].centered, out[0].uncentered);
        assert_eq!(out[0].squared_gain, 0.0);
    }

    #[test]
    fn table_curves_have_no_derivative() {
        let c = ParamCurve::new(
            "table",
            crate::tvar::ThetaCurve::Table {
                knots: vec![0.0, 1.0],
                values: vec![vec![0.1], vec![0.2]],
            },
            crate::tvar::SigmaCurve::Constant(1.0),
            1.0,
            0.5,
        )
        .unwrap();
        let s = Scenario::new(c, vec![100], vec![1.0], MuRule::Fixed(0.05));
        assert!(matches!(centered_risk(&s, 1), Err(Error::Validation(_))));
    }
}
