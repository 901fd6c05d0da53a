use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::nlms::{nlms_estimates_at, romberg_combine};
use crate::par::map_indexed;
use crate::rng::{derive_seed, tag};
use crate::tvar::simulate;

use super::scenario::{EstimatorKind, Scenario};

/// Seed of replicate `r` at path length `n`.
pub fn path_seed(master: u64, n: usize, r: usize) -> u64 {
    derive_seed(derive_seed(master, tag::PATH_LENGTH, n as u64), tag::REPLICATE, r as u64)
}

/// Errors `estimate − θ(t)` of every replicate, indexed `[n][t][replicate]`.
///
/// The NLMS arm is always present; the Romberg arm is filled when requested.
/// Both arms are computed from the same simulated paths.
#[derive(Debug, Clone)]
pub struct ErrorTable {
    pub d: usize,
    pub n_list: Vec<usize>,
    pub t_points: Vec<f64>,
    pub mus: Vec<f64>,
    pub gamma: Option<f64>,
    pub nlms: Vec<Vec<Vec<Vec<f64>>>>,
    pub romberg: Option<Vec<Vec<Vec<Vec<f64>>>>>,
}

impl ErrorTable {
    pub fn arm(&self, estimator: EstimatorKind) -> Result<&Vec<Vec<Vec<Vec<f64>>>>> {
        match estimator {
            EstimatorKind::Nlms => Ok(&self.nlms),
            EstimatorKind::Romberg => self
                .romberg
                .as_ref()
                .ok_or_else(|| Error::validation("romberg errors were not collected")),
        }
    }
}

/// Simulates every replicate of the scenario and records estimation errors.
pub fn collect_errors(scenario: &Scenario, workers: usize, with_romberg: bool) -> Result<ErrorTable> {
    scenario.validate()?;
    let gamma = if with_romberg {
        Some(
            scenario
                .gamma
                .ok_or_else(|| Error::validation("the romberg estimator needs gamma"))?,
        )
    } else {
        None
    };
    let curve = &scenario.curve;
    let targets: Vec<Vec<f64>> = scenario
        .t_points
        .iter()
        .map(|&t| curve.theta_at(t))
        .collect::<Result<_>>()?;
    let mus: Vec<f64> = scenario.n_list.iter().map(|&n| scenario.mu_rule.mu(n)).collect();
    let indices: Vec<Vec<usize>> = scenario
        .n_list
        .iter()
        .map(|&n| scenario.indices(n))
        .collect::<Result<_>>()?;
    let reps = scenario.replicates;
    let jobs = scenario.n_list.len() * reps;

    type Job = (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>);
    let results: Vec<Job> = map_indexed(workers, jobs, |job| {
        let (ni, r) = (job / reps, job % reps);
        let n = scenario.n_list[ni];
        let path = simulate(
            curve,
            n,
            &scenario.spec,
            path_seed(scenario.master_seed, n, r),
            &scenario.init,
        )?;
        let plain = nlms_estimates_at(&path, mus[ni], &indices[ni])?;
        let diff = |est: &[f64], target: &[f64]| -> Vec<f64> {
            est.iter().zip(target).map(|(a, b)| a - b).collect()
        };
        let corrected = match gamma {
            Some(g) => {
                let slow = nlms_estimates_at(&path, g * mus[ni], &indices[ni])?;
                Some(
                    plain
                        .iter()
                        .zip(&slow)
                        .zip(&targets)
                        .map(|((a, b), target)| diff(&romberg_combine(a, b, g), target))
                        .collect(),
                )
            }
            None => None,
        };
        let plain = plain.iter().zip(&targets).map(|(a, target)| diff(a, target)).collect();
        Ok((plain, corrected))
    })?;

    let nt = scenario.t_points.len();
    let empty = || vec![vec![Vec::with_capacity(reps); nt]; scenario.n_list.len()];
    let mut nlms = empty();
    let mut romberg = gamma.map(|_| empty());
    for (job, (plain, corrected)) in results.into_iter().enumerate() {
        let ni = job / reps;
        for (ti, e) in plain.into_iter().enumerate() {
            nlms[ni][ti].push(e);
        }
        if let (Some(table), Some(corrected)) = (romberg.as_mut(), corrected) {
            for (ti, e) in corrected.into_iter().enumerate() {
                table[ni][ti].push(e);
            }
        }
    }
    Ok(ErrorTable {
        d: curve.d,
        n_list: scenario.n_list.clone(),
        t_points: scenario.t_points.clone(),
        mus,
        gamma,
        nlms,
        romberg,
    })
}

/// Monte Carlo summary at one `(n, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEntry {
    pub n: usize,
    pub t: f64,
    pub mu: f64,
    pub replicates: usize,
    /// Mean error.
    pub bias: Vec<f64>,
    /// Standard error of each bias coordinate.
    pub bias_se: Vec<f64>,
    /// Sample covariance normalized by `R`, so that `msem = cov + bias biasᵀ`.
    pub cov: DMatrix<f64>,
    /// Sample covariance normalized by `R − 1`.
    pub cov_unbiased: DMatrix<f64>,
    /// Mean of `e eᵀ`.
    pub msem: DMatrix<f64>,
    /// `mean |e|`.
    pub l1_risk: f64,
    pub l1_se: f64,
    /// `(mean |e|²)^{1/2}`.
    pub l2_risk: f64,
    pub l2_se: f64,
}

impl RiskEntry {
    /// Summarizes replicate errors with compensated sums in replicate order.
    pub fn from_errors(n: usize, t: f64, mu: f64, errors: &[Vec<f64>]) -> RiskEntry {
        let r = errors.len();
        let d = errors.first().map_or(0, Vec::len);
        let rf = r as f64;
        let mean = |f: &dyn Fn(&Vec<f64>) -> f64| {
            let mut acc = CompensatedSum::default();
            for e in errors {
                acc.add(f(e));
            }
            acc.value() / rf
        };
        let bias: Vec<f64> = (0..d).map(|i| mean(&|e| e[i])).collect();
        let cov = DMatrix::from_fn(d, d, |i, j| mean(&|e| (e[i] - bias[i]) * (e[j] - bias[j])));
        let msem = DMatrix::from_fn(d, d, |i, j| mean(&|e| e[i] * e[j]));
        let cov_unbiased = &cov * (rf / (rf - 1.0));
        let bias_se = (0..d).map(|i| (cov_unbiased[(i, i)] / rf).sqrt()).collect();

        let norm2 = |e: &Vec<f64>| e.iter().map(|v| v * v).sum::<f64>();
        let l1 = mean(&|e| norm2(e).sqrt());
        let l1_var = mean(&|e| (norm2(e).sqrt() - l1).powi(2)) * rf / (rf - 1.0);
        let m2 = mean(&|e| norm2(e));
        let m2_var = mean(&|e| (norm2(e) - m2).powi(2)) * rf / (rf - 1.0);
        let l2 = m2.sqrt();
        let l2_se = if l2 > 0.0 { (m2_var / rf).sqrt() / (2.0 * l2) } else { 0.0 };
        RiskEntry {
            n,
            t,
            mu,
            replicates: r,
            bias,
            bias_se,
            cov,
            cov_unbiased,
            msem,
            l1_risk: l1,
            l1_se: (l1_var / rf).sqrt(),
            l2_risk: l2,
            l2_se,
        }
    }

    pub fn msem_trace(&self) -> f64 {
        self.msem.trace()
    }

    /// `max |msem − cov − bias biasᵀ|` over entries.
    pub fn decomposition_error(&self) -> f64 {
        let d = self.bias.len();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let gap = self.msem[(i, j)] - self.cov[(i, j)] - self.bias[i] * self.bias[j];
                worst = worst.max(gap.abs());
            }
        }
        worst
    }
}

/// One entry per `(n, t)`, ordered by `n` then `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub estimator: EstimatorKind,
    pub gamma: Option<f64>,
    pub entries: Vec<RiskEntry>,
}

impl RiskReport {
    pub fn from_table(table: &ErrorTable, estimator: EstimatorKind) -> Result<RiskReport> {
        let arm = table.arm(estimator)?;
        let mut entries = Vec::new();
        for (ni, &n) in table.n_list.iter().enumerate() {
            for (ti, &t) in table.t_points.iter().enumerate() {
                entries.push(RiskEntry::from_errors(n, t, table.mus[ni], &arm[ni][ti]));
            }
        }
        Ok(RiskReport {
            estimator,
            gamma: table.gamma,
            entries,
        })
    }

    pub fn at(&self, n: usize, t: f64) -> Option<&RiskEntry> {
        self.entries.iter().find(|e| e.n == n && e.t == t)
    }
}

/// Monte Carlo bias, covariance, MSEM and `L¹`/`L²` risks of the scenario's
/// estimator at every `(n, t)`.
pub fn monte_carlo_msem(scenario: &Scenario, workers: usize) -> Result<RiskReport> {
    let romberg = scenario.estimator == EstimatorKind::Romberg;
    let table = collect_errors(scenario, workers, romberg)?;
    RiskReport::from_table(&table, scenario.estimator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::MuRule;
    use crate::tvar::{InitialCondition, ParamCurve};

    fn scenario() -> Scenario {
        let c = ParamCurve::polynomial(vec![vec![0.2, 0.3]], 1.0, 1.0, 0.6).unwrap();
        let mut s = Scenario::new(c, vec![64, 256], vec![0.5, 1.0], MuRule::Fixed(0.1));
        s.replicates = 40;
        s.master_seed = 11;
        s
    }

    #[test]
    fn summary_statistics_match_direct_formulas() {
        let errors = vec![vec![1.0, 0.0], vec![-1.0, 2.0], vec![3.0, 1.0], vec![1.0, 1.0]];
        let e = RiskEntry::from_errors(10, 1.0, 0.1, &errors);
        assert_eq!(e.bias, vec![1.0, 1.0]);
        assert_eq!(e.cov[(0, 0)], 2.0);
        assert_eq!(e.cov[(1, 1)], 0.5);
        assert_eq!(e.cov[(0, 1)], -0.5);
        assert!((e.cov_unbiased[(0, 0)] - 8.0 / 3.0).abs() < 1e-15);
        assert!(e.decomposition_error() < 1e-15);
        let m2 = (1.0 + 5.0 + 10.0 + 2.0) / 4.0;
        assert!((e.l2_risk - f64::sqrt(m2)).abs() < 1e-15);
        let l1 = (1.0 + 5f64.sqrt() + 10f64.sqrt() + 2f64.sqrt()) / 4.0;
        assert!((e.l1_risk - l1).abs() < 1e-15);
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let s = scenario();
        let a = monte_carlo_msem(&s, 1).unwrap();
        let b = monte_carlo_msem(&s, 3).unwrap();
        assert_eq!(a, b);
        for e in &a.entries {
            assert!(e.decomposition_error() < 1e-10);
        }
    }

    #[test]
    fn noiseless_constant_curve_is_transient_only() {
        let c = ParamCurve::constant(vec![0.5], 0.0).unwrap();
        let mut s = Scenario::new(c, vec![100, 400, 1600], vec![1.0], MuRule::Fixed(0.2));
        s.init = InitialCondition::Explicit(vec![1.0]);
        s.replicates = 2;
        let r = monte_carlo_msem(&s, 1).unwrap();
        let traces: Vec<f64> = r.entries.iter().map(|e| e.msem_trace()).collect();
        assert!(traces.windows(2).all(|w| w[1] <= w[0]));
        for e in &r.entries {
            assert!(e.cov.iter().all(|v| v.abs() < 1e-20));
        }
    }

    #[test]
    fn romberg_arm_shares_paths() {
        let mut s = scenario();
        s.gamma = Some(0.5);
        let table = collect_errors(&s, 2, true).unwrap();
        let romberg = table.romberg.as_ref().unwrap();
        assert_eq!(romberg[0][0].len(), s.replicates);
        assert_ne!(romberg[0][0][0], table.nlms[0][0][0]);
    }
}
