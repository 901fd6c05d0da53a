use std::io::Write;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::local::local_covariance_yw;
use crate::rng::{derive_seed, stream, tag};
use crate::tvar::curve::ParamCurve;
use crate::tvar::innovations::InnovationSpec;
use crate::tvar::spectral_radius;

/// Initial state `X_{0,n} = [X_0, X_{−1}, …, X_{−d+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    Explicit(Vec<f64>),
    /// Zero-mean Gaussian with covariance `Σ(0)`.
    StationaryAtZero,
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Zero => "zero",
            InitialCondition::Explicit(_) => "explicit",
            InitialCondition::StationaryAtZero => "stationary",
        }
    }
}

/// One simulated realization `X_{1..n}` with its innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct TVARPath {
    pub n: usize,
    pub x0: Vec<f64>,
    pub samples: Vec<f64>,
    pub innovations: Vec<f64>,
    pub seed: u64,
    pub curve_id: String,
}

impl TVARPath {
    pub fn d(&self) -> usize {
        self.x0.len()
    }

    /// `X_j` for `j ≥ −d + 1`; nonpositive indices read the initial state.
    pub fn sample(&self, j: isize) -> f64 {
        if j >= 1 {
            self.samples[(j - 1) as usize]
        } else {
            self.x0[(-j) as usize]
        }
    }

    /// Writes the regressor `X_{k,n} = [X_k, …, X_{k−d+1}]` into `buf`.
    pub fn state_into(&self, k: usize, buf: &mut [f64]) {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = self.sample(k as isize - i as isize);
        }
    }

    pub fn state(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.d()];
        self.state_into(k, &mut v);
        v
    }

    /// Path truncated after sample `k` (same seed and curve id).
    pub fn truncated(&self, k: usize) -> TVARPath {
        TVARPath {
            n: k,
            x0: self.x0.clone(),
            samples: self.samples[..k].to_vec(),
            innovations: self.innovations[..k].to_vec(),
            seed: self.seed,
            curve_id: self.curve_id.clone(),
        }
    }

    /// Multiplies the initial state and samples by `c` (innovations untouched).
    pub fn scaled(&self, c: f64) -> TVARPath {
        TVARPath {
            x0: self.x0.iter().map(|v| v * c).collect(),
            samples: self.samples.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// CSV with header `k,x,eps`, one row per `k = 1..n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,x,eps")?;
        for k in 0..self.n {
            writeln!(
                w,
                "{},{},{}",
                k + 1,
                crate::csv::fmt(self.samples[k]),
                crate::csv::fmt(self.innovations[k])
            )?;
        }
        Ok(())
    }

    /// Recomputes `X_{1..n}` from `x0`, the innovations and the curve and
    /// reports whether every sample matches bit for bit.
    pub fn replays_exactly(&self, curve: &ParamCurve) -> Result<bool> {
        if curve.d != self.d() {
            return Ok(false);
        }
        let replay = run_recursion(curve, self.n, &self.x0, &self.innovations)?;
        Ok(replay
            .iter()
            .zip(&self.samples)
            .all(|(a, b)| a.to_bits() == b.to_bits()))
    }
}

/// `X_k = θ((k−1)/n)ᵀ X_{k−1} + σ(k/n) ε_k`, `k = 1..n`.
fn run_recursion(curve: &ParamCurve, n: usize, x0: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    let d = curve.d;
    let nf = n as f64;
    // state = [X_{k−1}, …, X_{k−d}]
    let mut state = x0.to_vec();
    let mut samples = Vec::with_capacity(n);
    let mut theta = curve.theta_at(0.0)?;
    for k in 1..=n {
        if k > 1 {
            theta = curve.theta_at((k - 1) as f64 / nf)?;
        }
        let sigma = curve.sigma_at(k as f64 / nf)?;
        let mut x = 0.0;
        for i in 0..d {
            x += theta[i] * state[i];
        }
        x += sigma * eps[k - 1];
        samples.push(x);
        state.rotate_right(1);
        state[0] = x;
    }
    Ok(samples)
}

/// Standard normals used for the stationary initial state of a path seed.
pub(crate) fn initial_normals(seed: u64, d: usize) -> Vec<f64> {
    let mut rng = stream(derive_seed(seed, tag::INITIAL_STATE, 0));
    (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub(crate) fn stationary_factor(curve: &ParamCurve, t: f64) -> Result<DMatrix<f64>> {
    let (theta, sigma) = curve.eval(t)?;
    let cov = local_covariance_yw(&theta, sigma)?;
    crate::linalg::cholesky(&cov.matrix)
}

/// Simulates one path of the TVAR recursion in companion form.
///
/// Innovations come from the stream `derive_seed(seed, INNOVATIONS, 0)` and
/// the stationary initial state, when requested, from
/// `derive_seed(seed, INITIAL_STATE, 0)`.
pub fn simulate(
    curve: &ParamCurve,
    n: usize,
    spec: &InnovationSpec,
    seed: u64,
    init: &InitialCondition,
) -> Result<TVARPath> {
    if n == 0 {
        return Err(Error::validation("n must be at least 1"));
    }
    let d = curve.d;
    let x0 = match init {
        InitialCondition::Zero => vec![0.0; d],
        InitialCondition::Explicit(v) => {
            if v.len() != d {
                return Err(Error::validation(format!(
                    "initial state has length {}, expected {d}",
                    v.len()
                )));
            }
            v.clone()
        }
        InitialCondition::StationaryAtZero => {
            let radius = spectral_radius(&curve.theta_at(0.0)?)?;
            if radius >= 1.0 {
                return Err(Error::validation(format!(
                    "stationary initialization needs a stable θ(0), spectral radius is {radius}"
                )));
            }
            let l = stationary_factor(curve, 0.0)?;
            crate::linalg::mat_vec(&l, &initial_normals(seed, d))
        }
    };
    let innovations = crate::tvar::sample_innovations(spec, n, derive_seed(seed, tag::INNOVATIONS, 0))?;
    let samples = run_recursion(curve, n, &x0, &innovations)?;
    Ok(TVARPath {
        n,
        x0,
        samples,
        innovations,
        seed,
        curve_id: curve.id.clone(),
    })
}
