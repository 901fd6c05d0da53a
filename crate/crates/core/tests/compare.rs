use tvar::risk::{collect_errors, compare_estimators, MuRule, RiskEntry, Scenario};
use tvar::tvar::ParamCurve;

/// Variance of `(a − γb)/(1 − γ)` relative to that of `a`, where `a` and `b`
/// are the stationary NLMS noise terms at step sizes `μ` and `γμ` driven by
/// the same innovations: `Var a = μσ²/2`, `Var b = γμσ²/2`,
/// `Cov(a, b) = γμσ²/(1 + γ)`.
fn paired_variance_ratio(gamma: f64) -> f64 {
    (gamma * gamma + 3.0 * gamma + 1.0) / (1.0 + gamma)
}

fn constant_scenario(gamma: f64) -> Scenario {
    let curve = ParamCurve::constant(vec![0.5], 1.0).unwrap();
    let mut sc = Scenario::new(curve, vec![5000], vec![1.0], MuRule::Fixed(0.02));
    sc.replicates = 1000;
    sc.master_seed = 44;
    sc.gamma = Some(gamma);
    sc
}

#[test]
fn variance_inflation_follows_paired_formula() {
    let mut last = 0.0;
    for gamma in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let table = collect_errors(&constant_scenario(gamma), 0, true).unwrap();
        let nlms = RiskEntry::from_errors(5000, 1.0, 0.02, &table.nlms[0][0]);
        let romberg = RiskEntry::from_errors(5000, 1.0, 0.02, &table.romberg.as_ref().unwrap()[0][0]);
        let ratio = romberg.cov_unbiased[(0, 0)] / nlms.cov_unbiased[(0, 0)];
        let expected = paired_variance_ratio(gamma);
        assert!((ratio / expected - 1.0).abs() < 0.12, "gamma {gamma}: {ratio} vs {expected}");
        assert!(ratio > last, "inflation should grow with gamma");
        last = ratio;
    }
}

#[test]
fn constant_curve_risk_ratio_is_near_variance_ratio() {
    let report = compare_estimators(&constant_scenario(0.5), 0).unwrap();
    let e = &report.entries[0];
    // The L2 risk ratio is the square root of the variance ratio, up to the
    // small stationary bias of each arm.
    let expected = paired_variance_ratio(0.5).sqrt();
    assert!((e.l2_ratio - expected).abs() < 4.0 * e.l2_ratio_se + 0.05, "{} ± {}", e.l2_ratio, e.l2_ratio_se);
}

#[test]
fn smooth_curve_favours_the_corrected_estimator() {
    let curve = ParamCurve::polynomial(vec![vec![0.1, 0.2, 0.15]], 1.0, 2.0, 0.45).unwrap();
    let mut sc = Scenario::new(curve, vec![1 << 15], vec![1.0], MuRule::Minimax { alpha: 0.5, beta: 1.0 });
    sc.replicates = 300;
    sc.master_seed = 45;
    sc.gamma = Some(0.5);
    let e = &compare_estimators(&sc, 0).unwrap().entries[0];
    assert!(e.l2_ratio + 3.0 * e.l2_ratio_se < 1.0, "{} ± {}", e.l2_ratio, e.l2_ratio_se);
}
