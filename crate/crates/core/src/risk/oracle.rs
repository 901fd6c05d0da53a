use crate::error::{Error, Result};
use crate::local::local_covariance_at;
use crate::nlms::estimate_index;
use crate::tvar::ParamCurve;

/// Noise-free leading bias of the NLMS estimate at `t`.
///
/// With `m = [tn]` and `Σ = Σ(m/n)` frozen, runs
/// `J_{k+1} = (I − μΣ) J_k + θ(k/n) − θ((k+1)/n)` from `J_0 = 0` and returns
/// `J_m`.
pub fn deterministic_bias_oracle(curve: &ParamCurve, mu: f64, n: usize, t: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::validation("step size must be positive"));
    }
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    let m = estimate_index(t, n)?;
    let nf = n as f64;
    let sigma = local_covariance_at(curve, m as f64 / nf)?.matrix;
    let d = curve.d;
    let mut j = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut theta_k = curve.theta_at(0.0)?;
    for k in 0..m {
        let theta_next = curve.theta_at((k + 1) as f64 / nf)?;
        for (row, slot) in next.iter_mut().enumerate() {
            let mut s = 0.0;
            for col in 0..d {
                s += sigma[(row, col)] * j[col];
            }
            *slot = j[row] - mu * s + theta_k[row] - theta_next[row];
        }
        std::mem::swap(&mut j, &mut next);
        theta_k = theta_next;
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve_gives_zero() {
        let c = ParamCurve::constant(vec![0.4, 0.2], 1.0).unwrap();
        assert_eq!(deterministic_bias_oracle(&c, 0.01, 1000, 0.7).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_curve_matches_geometric_series() {
        let (a, c, sigma) = (0.1, 0.3, 1.0);
        let curve = ParamCurve::polynomial(vec![vec![a, c]], sigma, 1.0, 0.5).unwrap();
        let (mu, n, t) = (0.01, 3000, 0.8);
        let m = estimate_index(t, n).unwrap();
        let theta_m = a + c * m as f64 / n as f64;
        let s = sigma * sigma / (1.0 - theta_m * theta_m);
        let expected = -(c / n as f64) * (1.0 - (1.0 - mu * s).powi(m as i32)) / (mu * s);
        let got = deterministic_bias_oracle(&curve, mu, n, t).unwrap()[0];
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}
