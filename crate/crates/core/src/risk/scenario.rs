use crate::error::{Error, Result};
use crate::nlms::estimate_index;
use crate::tvar::{InitialCondition, InnovationSpec, ParamCurve};

/// `α n^{−2β/(1+2β)}`; an infinite `β` gives the limiting exponent `−1`.
pub fn step_size_rule(n: usize, beta: f64, alpha: f64) -> f64 {
    let exponent = if beta.is_infinite() {
        1.0
    } else {
        2.0 * beta / (1.0 + 2.0 * beta)
    };
    alpha * (n as f64).powf(-exponent)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuRule {
    Fixed(f64),
    /// `μ = α n^{−2β/(1+2β)}`.
    Minimax { alpha: f64, beta: f64 },
}

impl MuRule {
    pub fn mu(&self, n: usize) -> f64 {
        match *self {
            MuRule::Fixed(mu) => mu,
            MuRule::Minimax { alpha, beta } => step_size_rule(n, beta, alpha),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MuRule::Fixed(mu) if !(mu > 0.0 && mu.is_finite()) => {
                Err(Error::validation(format!("fixed step size must be positive, got {mu}")))
            }
            MuRule::Minimax { alpha, beta } if !(alpha > 0.0 && beta > 0.0) => Err(Error::validation(format!(
                "minimax rule needs alpha > 0 and beta > 0, got alpha = {alpha}, beta = {beta}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Nlms,
    Romberg,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Nlms => "nlms",
            EstimatorKind::Romberg => "romberg",
        }
    }
}

/// A Monte Carlo experiment: one curve, several path lengths and evaluation
/// points, `replicates` independent paths per length.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub curve: ParamCurve,
    pub spec: InnovationSpec,
    pub n_list: Vec<usize>,
    pub t_points: Vec<f64>,
    pub mu_rule: MuRule,
    /// Second step size ratio; required by the Romberg estimator.
    pub gamma: Option<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    pub estimator: EstimatorKind,
    pub init: InitialCondition,
    /// Lower edge of the evaluation window `[η, 1]`.
    pub eta: Option<f64>,
}

impl Scenario {
    pub fn new(curve: ParamCurve, n_list: Vec<usize>, t_points: Vec<f64>, mu_rule: MuRule) -> Self {
        Scenario {
            curve,
            spec: InnovationSpec::gaussian(),
            n_list,
            t_points,
            mu_rule,
            gamma: None,
            replicates: 200,
            master_seed: 0,
            estimator: EstimatorKind::Nlms,
            init: InitialCondition::Zero,
            eta: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.replicates < 2 {
            problems.push(format!("replicates must be at least 2, got {}", self.replicates));
        }
        if self.n_list.is_empty() {
            problems.push("n_list is empty".to_string());
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 10) {
            problems.push(format!("every n must be at least 10, got {n}"));
        }
        if self.t_points.is_empty() {
            problems.push("t_points is empty".to_string());
        }
        let eta = self.eta.unwrap_or(0.0);
        for &t in &self.t_points {
            if !(t > 0.0 && t <= 1.0) {
                problems.push(format!("t = {t} is outside (0, 1]"));
            } else if t < eta {
                problems.push(format!("t = {t} lies below eta = {eta}"));
            }
        }
        if let Err(e) = self.mu_rule.validate() {
            problems.push(e.to_string());
        }
        match self.gamma {
            Some(g) if !(g > 0.0 && g < 1.0) => problems.push(format!("gamma = {g} must lie in (0,1)")),
            None if self.estimator == EstimatorKind::Romberg => {
                problems.push("the romberg estimator needs gamma".to_string())
            }
            _ => {}
        }
        if let Err(e) = self.spec.validate() {
            problems.push(e.to_string());
        }
        if let InitialCondition::Explicit(v) = &self.init {
            if v.len() != self.curve.d {
                problems.push(format!("initial state has length {}, expected {}", v.len(), self.curve.d));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::validation(problems.join("; ")))
        }
    }

    /// `[t n]` for every evaluation point.
    pub(crate) fn indices(&self, n: usize) -> Result<Vec<usize>> {
        self.t_points.iter().map(|&t| estimate_index(t, n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_rule_examples() {
        let mu = step_size_rule(1 << 15, 1.0, 1.0);
        assert!((mu - 2f64.powi(-10)).abs() < 1e-15);
        let ratio = step_size_rule(1000, 1.0, 0.7) / step_size_rule(4000, 1.0, 0.7);
        assert!((ratio - 4f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(step_size_rule(64, f64::INFINITY, 1.0), 1.0 / 64.0);
        assert!((step_size_rule(64, 1e9, 1.0) - 1.0 / 64.0).abs() < 1e-9);
    }

    #[test]
    fn validation_lists_every_problem() {
        let c = ParamCurve::constant(vec![0.5], 1.0).unwrap();
        let mut s = Scenario::new(c, vec![5, 100], vec![0.0, 0.5], MuRule::Fixed(-1.0));
        s.replicates = 1;
        s.estimator = EstimatorKind::Romberg;
        let msg = s.validate().unwrap_err().to_string();
        for needle in ["replicates", "at least 10", "(0, 1]", "positive", "gamma"] {
            assert!(msg.contains(needle), "{msg}");
        }
    }
}
