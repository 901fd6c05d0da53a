use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;

use super::montecarlo::{collect_errors, RiskEntry};
use super::scenario::Scenario;

/// NLMS and Romberg summaries computed on the same replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub n: usize,
    pub t: f64,
    pub mu: f64,
    pub nlms: RiskEntry,
    pub romberg: RiskEntry,
    /// `L²` risk of Romberg divided by `L²` risk of NLMS.
    pub l2_ratio: f64,
    /// Delta-method standard error of `l2_ratio` under the paired design.
    pub l2_ratio_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub gamma: f64,
    pub entries: Vec<ComparisonEntry>,
}

/// Ratio `mean(a) / mean(b)` of paired samples and its standard error.
fn paired_ratio(a: &[f64], b: &[f64]) -> (f64, f64) {
    let r = a.len() as f64;
    let mean = |xs: &mut dyn Iterator<Item = f64>| {
        let mut acc = CompensatedSum::default();
        xs.for_each(|x| acc.add(x));
        acc.value() / r
    };
    let ma = mean(&mut a.iter().copied());
    let mb = mean(&mut b.iter().copied());
    let ratio = ma / mb;
    let resid_var = mean(&mut a.iter().zip(b).map(|(x, y)| (x - ratio * y).powi(2))) * r / (r - 1.0);
    (ratio, (resid_var / r).sqrt() / mb)
}

/// Runs both estimators on identical paths and reports their risks side by
/// side.
pub fn compare_estimators(scenario: &Scenario, workers: usize) -> Result<ComparisonReport> {
    let gamma = scenario
        .gamma
        .ok_or_else(|| Error::validation("comparison needs gamma in (0,1)"))?;
    let table = collect_errors(scenario, workers, true)?;
    let romberg = table.arm(super::EstimatorKind::Romberg)?;
    let mut entries = Vec::new();
    for (ni, &n) in table.n_list.iter().enumerate() {
        let mu = table.mus[ni];
        for (ti, &t) in table.t_points.iter().enumerate() {
            let plain = &table.nlms[ni][ti];
            let corrected = &romberg[ni][ti];
            let sq = |e: &Vec<f64>| e.iter().map(|v| v * v).sum::<f64>();
            let a: Vec<f64> = corrected.iter().map(sq).collect();
            let b: Vec<f64> = plain.iter().map(sq).collect();
            let (ratio, ratio_se) = paired_ratio(&a, &b);
            let l2_ratio = ratio.sqrt();
            entries.push(ComparisonEntry {
                n,
                t,
                mu,
                nlms: RiskEntry::from_errors(n, t, mu, plain),
                romberg: RiskEntry::from_errors(n, t, mu, corrected),
                l2_ratio,
                l2_ratio_se: ratio_se / (2.0 * l2_ratio),
            });
        }
    }
    Ok(ComparisonReport { gamma, entries })
}
