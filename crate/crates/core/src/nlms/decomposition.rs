use std::io::Write;

use crate::error::{Error, Result};
use crate::tvar::{ParamCurve, TVARPath};

/// The tracking error `θ̂_k − θ(k/n)` split into transient (`u`), noise (`v`)
/// and drift (`w`) parts. Each sequence is row-major `(n + 1) × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDecomposition {
    pub d: usize,
    pub n: usize,
    pub delta_u: Vec<f64>,
    pub delta_v: Vec<f64>,
    pub delta_w: Vec<f64>,
    /// `θ̂_k − θ(k/n)` computed directly from the NLMS recursion.
    pub total: Vec<f64>,
}

impl ErrorDecomposition {
    pub fn u(&self, k: usize) -> &[f64] {
        &self.delta_u[k * self.d..(k + 1) * self.d]
    }

    pub fn v(&self, k: usize) -> &[f64] {
        &self.delta_v[k * self.d..(k + 1) * self.d]
    }

    pub fn w(&self, k: usize) -> &[f64] {
        &self.delta_w[k * self.d..(k + 1) * self.d]
    }

    /// `max |δ^u + δ^v + δ^w − (θ̂ − θ)|` over all indices and coordinates.
    pub fn identity_error(&self) -> f64 {
        (0..self.total.len())
            .map(|i| (self.delta_u[i] + self.delta_v[i] + self.delta_w[i] - self.total[i]).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `k,u_1,v_1,w_1,…,u_d,v_d,w_d`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["k".to_string()];
        for i in 1..=self.d {
            header.extend([format!("u_{i}"), format!("v_{i}"), format!("w_{i}")]);
        }
        writeln!(w, "{}", header.join(","))?;
        for k in 0..=self.n {
            let mut row = vec![k.to_string()];
            for i in 0..self.d {
                let idx = k * self.d + i;
                row.push(crate::csv::fmt(self.delta_u[idx]));
                row.push(crate::csv::fmt(self.delta_v[idx]));
                row.push(crate::csv::fmt(self.delta_w[idx]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Runs the three linear recursions driven by `I − μ F_μ(X_k)`:
///
/// * `δ^u_{k+1} = (I − μF)δ^u_k`, `δ^u_0 = −θ(0)`
/// * `δ^v_{k+1} = (I − μF)δ^v_k + μ L_μ(X_k) σ_{k+1} ε_{k+1}`, `δ^v_0 = 0`
/// * `δ^w_{k+1} = (I − μF)δ^w_k + θ(k/n) − θ((k+1)/n)`, `δ^w_0 = 0`
pub fn error_decomposition(path: &TVARPath, mu: f64, curve: &ParamCurve) -> Result<ErrorDecomposition> {
    if !(mu > 0.0) {
        return Err(Error::validation("step size must be positive"));
    }
    if !path.replays_exactly(curve)? {
        return Err(Error::validation(format!(
            "path (curve '{}') does not replay under curve '{}'",
            path.curve_id, curve.id
        )));
    }
    let d = path.d();
    let n = path.n;
    let nf = n as f64;
    let len = (n + 1) * d;
    let mut du = Vec::with_capacity(len);
    let mut dv = Vec::with_capacity(len);
    let mut dw = Vec::with_capacity(len);
    let mut total = Vec::with_capacity(len);

    let mut u: Vec<f64> = curve.theta_at(0.0)?.iter().map(|v| -v).collect();
    let mut v = vec![0.0; d];
    let mut w = vec![0.0; d];
    let mut theta_hat = vec![0.0; d];
    let mut theta_k = curve.theta_at(0.0)?;
    du.extend_from_slice(&u);
    dv.extend_from_slice(&v);
    dw.extend_from_slice(&w);
    total.extend(theta_hat.iter().zip(&theta_k).map(|(a, b)| a - b));

    let mut state = path.state(0);
    for k in 0..n {
        let theta_next = curve.theta_at((k + 1) as f64 / nf)?;
        let sigma_next = curve.sigma_at((k + 1) as f64 / nf)?;
        let norm2: f64 = state.iter().map(|x| x * x).sum();
        let scale = 1.0 / (1.0 + mu * norm2);
        // (I − μ L xᵀ) δ = δ − μ L (xᵀ δ)
        let apply = |delta: &mut [f64]| {
            let proj: f64 = state.iter().zip(delta.iter()).map(|(a, b)| a * b).sum();
            for (dl, x) in delta.iter_mut().zip(&state) {
                *dl -= mu * scale * x * proj;
            }
        };
        apply(&mut u);
        apply(&mut v);
        apply(&mut w);
        let noise = mu * sigma_next * path.innovations[k] * scale;
        for i in 0..d {
            v[i] += noise * state[i];
            w[i] += theta_k[i] - theta_next[i];
        }
        crate::nlms::nlms_step_in_place(&mut theta_hat, &state, path.samples[k], mu);

        du.extend_from_slice(&u);
        dv.extend_from_slice(&v);
        dw.extend_from_slice(&w);
        total.extend(theta_hat.iter().zip(&theta_next).map(|(a, b)| a - b));

        state.rotate_right(1);
        state[0] = path.samples[k];
        theta_k = theta_next;
    }
    Ok(ErrorDecomposition {
        d,
        n,
        delta_u: du,
        delta_v: dv,
        delta_w: dw,
        total,
    })
}
