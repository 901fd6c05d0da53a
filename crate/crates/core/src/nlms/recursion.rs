use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tvar::TVARPath;

/// `L_ν(x) = x / (1 + ν|x|²)` and `F_ν(x) = L_ν(x) xᵀ`.
pub fn normalized_gain(x: &[f64], nu: f64) -> (Vec<f64>, DMatrix<f64>) {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    let scale = 1.0 / (1.0 + nu * norm2);
    let l: Vec<f64> = x.iter().map(|v| v * scale).collect();
    let d = x.len();
    let f = DMatrix::from_fn(d, d, |i, j| l[i] * x[j]);
    (l, f)
}

/// One NLMS update in place.
#[inline]
pub fn nlms_step_in_place(theta_hat: &mut [f64], x_state: &[f64], x_next: f64, mu: f64) {
    let mut norm2 = 0.0;
    let mut pred = 0.0;
    for (t, x) in theta_hat.iter().zip(x_state) {
        norm2 += x * x;
        pred += t * x;
    }
    let gain = mu * (x_next - pred) / (1.0 + mu * norm2);
    for (t, x) in theta_hat.iter_mut().zip(x_state) {
        *t += gain * x;
    }
}

pub fn nlms_step(theta_hat: &[f64], x_state: &[f64], x_next: f64, mu: f64) -> Vec<f64> {
    let mut out = theta_hat.to_vec();
    nlms_step_in_place(&mut out, x_state, x_next, mu);
    out
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::validation(format!("step size must be positive, got {mu}")));
    }
    if mu > 1.0 {
        log::warn!("step size {mu} exceeds 1; the recursion stays bounded but the risk bounds assume small steps");
    }
    Ok(())
}

/// The estimates `θ̂_{0..n}(μ)` along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct NLMSTrajectory {
    pub mu: f64,
    pub d: usize,
    /// Row-major `(n + 1) × d`.
    estimates: Vec<f64>,
    pub path_seed: u64,
}

impl NLMSTrajectory {
    pub fn n(&self) -> usize {
        self.estimates.len() / self.d - 1
    }

    pub fn estimate(&self, k: usize) -> &[f64] {
        &self.estimates[k * self.d..(k + 1) * self.d]
    }

    /// CSV with header `k,theta_hat_1..theta_hat_d`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.d).map(|i| format!("theta_hat_{i}")).collect();
        writeln!(w, "k,{}", header.join(","))?;
        for k in 0..=self.n() {
            let row: Vec<String> = self.estimate(k).iter().map(|v| crate::csv::fmt(*v)).collect();
            writeln!(w, "{k},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Runs the recursion over the whole path, starting from `θ̂_0 = 0`.
pub fn nlms_run(path: &TVARPath, mu: f64) -> Result<NLMSTrajectory> {
    check_mu(mu)?;
    let d = path.d();
    let mut estimates = Vec::with_capacity((path.n + 1) * d);
    let mut theta = vec![0.0; d];
    let mut state = path.state(0);
    estimates.extend_from_slice(&theta);
    for k in 0..path.n {
        let next = path.samples[k];
        nlms_step_in_place(&mut theta, &state, next, mu);
        estimates.extend_from_slice(&theta);
        state.rotate_right(1);
        state[0] = next;
    }
    Ok(NLMSTrajectory {
        mu,
        d,
        estimates,
        path_seed: path.seed,
    })
}

/// `θ̂_k(μ)` for each requested index, without storing the trajectory.
pub fn nlms_estimates_at(path: &TVARPath, mu: f64, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_mu(mu)?;
    let last = indices.iter().copied().max().unwrap_or(0);
    if last > path.n {
        return Err(Error::domain(format!("index {last} exceeds path length {}", path.n)));
    }
    let d = path.d();
    let mut out = vec![Vec::new(); indices.len()];
    let mut theta = vec![0.0; d];
    let mut state = path.state(0);
    let record = |k: usize, theta: &[f64], out: &mut Vec<Vec<f64>>| {
        for (slot, &idx) in indices.iter().enumerate() {
            if idx == k {
                out[slot] = theta.to_vec();
            }
        }
    };
    record(0, &theta, &mut out);
    for k in 0..last {
        let next = path.samples[k];
        nlms_step_in_place(&mut theta, &state, next, mu);
        state.rotate_right(1);
        state[0] = next;
        record(k + 1, &theta, &mut out);
    }
    Ok(out)
}

/// `[t n]`, with `t = 1` mapping to `n`.
///
/// A relative guard of `1e−12` absorbs representation error in products such
/// as `0.29 · 100`.
pub fn estimate_index(t: f64, n: usize) -> Result<usize> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t = {t} is outside (0, 1]")));
    }
    let x = t * n as f64;
    Ok(((x * (1.0 + 1e-12)).floor() as usize).min(n))
}

/// `θ̂_n(t; μ) = θ̂_{[tn], n}(μ)`.
pub fn pointwise_estimate(traj: &NLMSTrajectory, t: f64, n: usize) -> Result<Vec<f64>> {
    if traj.n() != n {
        return Err(Error::validation(format!(
            "trajectory has {} steps, expected {n}",
            traj.n()
        )));
    }
    Ok(traj.estimate(estimate_index(t, n)?).to_vec())
}

/// `(a − γ b) / (1 − γ)`, evaluated as `a + γ (a − b) / (1 − γ)` so that
/// equal inputs are returned unchanged.
pub fn romberg_combine(at_mu: &[f64], at_gamma_mu: &[f64], gamma: f64) -> Vec<f64> {
    at_mu
        .iter()
        .zip(at_gamma_mu)
        .map(|(a, b)| a + gamma * (a - b) / (1.0 - gamma))
        .collect()
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::validation(format!("gamma = {gamma} must lie in (0,1)")));
    }
    Ok(())
}

/// `θ̃_n(t; μ, γ) = (θ̂_n(t; μ) − γ θ̂_n(t; γμ)) / (1 − γ)`; both recursions run
/// on the same path.
pub fn bias_corrected_estimate(path: &TVARPath, mu: f64, gamma: f64, t: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let k = estimate_index(t, path.n)?;
    let a = nlms_estimates_at(path, mu, &[k])?;
    let b = nlms_estimates_at(path, gamma * mu, &[k])?;
    Ok(romberg_combine(&a[0], &b[0], gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tvar::{simulate, InitialCondition, InnovationSpec, ParamCurve};

    #[test]
    fn gain_examples() {
        let (l, f) = normalized_gain(&[0.0, 0.0], 0.3);
        assert_eq!(l, vec![0.0, 0.0]);
        assert_eq!(f, DMatrix::zeros(2, 2));

        let x = [1.0, -2.0];
        let (l, f) = normalized_gain(&x, 0.0);
        assert_eq!(l, x.to_vec());
        assert_eq!(f, DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -2.0, 4.0]));

        let (l, f) = normalized_gain(&[1.0], 0.5);
        assert!((l[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((f[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn step_examples() {
        assert_eq!(nlms_step(&[0.3, 0.1], &[0.0, 0.0], 5.0, 0.2), vec![0.3, 0.1]);
        let s = nlms_step(&[0.0], &[1.0], 1.0, 0.5);
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-15);
        let th = [0.5, -0.25];
        let x = [2.0, 4.0];
        assert_eq!(nlms_step(&th, &x, 0.0, 0.7), th.to_vec());
    }

    #[test]
    fn index_examples() {
        assert_eq!(estimate_index(0.5, 7).unwrap(), 3);
        assert_eq!(estimate_index(1.0, 7).unwrap(), 7);
        assert_eq!(estimate_index(0.25, 8).unwrap(), 2);
        assert_eq!(estimate_index(0.29, 100).unwrap(), 29);
        assert!(matches!(estimate_index(0.0, 7), Err(Error::Domain(_))));
        assert!(estimate_index(1.01, 7).is_err());
    }

    fn path() -> (ParamCurve, TVARPath) {
        let c = ParamCurve::polynomial(vec![vec![0.1, 0.3], vec![-0.2]], 1.0, 1.0, 0.8).unwrap();
        let p = simulate(&c, 400, &InnovationSpec::gaussian(), 9, &InitialCondition::StationaryAtZero).unwrap();
        (c, p)
    }

    #[test]
    fn zero_path_gives_zero_trajectory() {
        let c = ParamCurve::constant(vec![0.4], 0.0).unwrap();
        let p = simulate(&c, 50, &InnovationSpec::gaussian(), 1, &InitialCondition::Zero).unwrap();
        let tr = nlms_run(&p, 0.1).unwrap();
        assert!((0..=50).all(|k| tr.estimate(k) == [0.0]));
    }

    #[test]
    fn run_starts_at_zero_and_first_step_matches() {
        let (_, p) = path();
        let tr = nlms_run(&p, 0.05).unwrap();
        assert_eq!(tr.n(), 400);
        assert_eq!(tr.estimate(0), &[0.0, 0.0]);
        let one = nlms_step(&[0.0, 0.0], &p.state(0), p.samples[0], 0.05);
        assert_eq!(tr.estimate(1), one.as_slice());
    }

    #[test]
    fn streaming_matches_stored() {
        let (_, p) = path();
        let tr = nlms_run(&p, 0.05).unwrap();
        let got = nlms_estimates_at(&p, 0.05, &[0, 17, 400, 17]).unwrap();
        assert_eq!(got[0], tr.estimate(0));
        assert_eq!(got[1], tr.estimate(17));
        assert_eq!(got[2], tr.estimate(400));
        assert_eq!(got[3], tr.estimate(17));
        assert_eq!(pointwise_estimate(&tr, 1.0, 400).unwrap(), tr.estimate(400));
    }

    #[test]
    fn romberg_examples() {
        assert_eq!(romberg_combine(&[0.7], &[0.7], 0.3)[0], 0.7);
        assert!((romberg_combine(&[1.0], &[0.8], 0.5)[0] - 1.2).abs() < 1e-15);
        let (_, p) = path();
        assert!(matches!(
            bias_corrected_estimate(&p, 0.05, 1.5, 0.5),
            Err(Error::Validation(_))
        ));
        assert!(bias_corrected_estimate(&p, 0.05, 0.0, 0.5).is_err());
        let est = bias_corrected_estimate(&p, 0.05, 0.5, 0.5).unwrap();
        let a = pointwise_estimate(&nlms_run(&p, 0.05).unwrap(), 0.5, 400).unwrap();
        let b = pointwise_estimate(&nlms_run(&p, 0.025).unwrap(), 0.5, 400).unwrap();
        assert_eq!(est, romberg_combine(&a, &b, 0.5));
    }

    #[test]
    fn rejects_nonpositive_mu() {
        let (_, p) = path();
        assert!(nlms_run(&p, 0.0).is_err());
        assert!(nlms_run(&p, -1.0).is_err());
    }
}
