//! Parameter curves `t ↦ (θ(t), σ(t))` on `[0, 1]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::expand_reciprocal_product;

/// Polynomial in `t`, ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
    }
}

/// Closed-form coefficient families.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// `θ(t) = value`.
    Constant { value: Vec<f64> },
    /// One polynomial in `t` per coordinate.
    Polynomial { coeffs: Vec<Poly> },
    /// `θ_i(t) = offset_i + amplitude_i · cos(π · frequency · t)`.
    Cosine {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: f64,
    },
    /// `θ(u) = base + coeff · |anchor − u|^exponent`.
    ///
    /// At `u = anchor` this is a one-sided power law with local coefficient
    /// `coeff` and exponent `exponent`.
    PowerLaw {
        anchor: f64,
        base: Vec<f64>,
        coeff: Vec<f64>,
        exponent: f64,
    },
}

/// A trajectory `t ↦ λ(t)` of one reciprocal root, in polar form.
#[derive(Debug, Clone, PartialEq)]
pub struct RootPath {
    pub modulus: Poly,
    pub angle: Poly,
}

impl RootPath {
    pub fn eval(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.modulus.eval(t), self.angle.eval(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaCurve {
    ClosedForm(ClosedForm),
    /// Piecewise-linear interpolation of `(knot, value)` pairs.
    Table { knots: Vec<f64>, values: Vec<Vec<f64>> },
    /// Coefficients of `∏ (1 − λ_k(t) z)`.
    Roots(Vec<RootPath>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaCurve {
    Constant(f64),
    Polynomial(Poly),
    Table { knots: Vec<f64>, values: Vec<f64> },
}

impl SigmaCurve {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SigmaCurve::Constant(s) => *s,
            SigmaCurve::Polynomial(p) => p.eval(t),
            SigmaCurve::Table { knots, values } => {
                let (i, w) = locate(knots, t);
                if w == 0.0 {
                    values[i]
                } else {
                    (1.0 - w) * values[i] + w * values[i + 1]
                }
            }
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            SigmaCurve::Constant(s) => *s == 0.0,
            SigmaCurve::Polynomial(p) => p.0.iter().all(|c| *c == 0.0),
            SigmaCurve::Table { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }
}

/// Index of the left knot and the interpolation weight toward the right one.
fn locate(knots: &[f64], t: f64) -> (usize, f64) {
    let last = knots.len() - 1;
    if t <= knots[0] {
        return (0, 0.0);
    }
    if t >= knots[last] {
        return (last, 0.0);
    }
    let i = knots.partition_point(|k| *k <= t) - 1;
    let w = (t - knots[i]) / (knots[i + 1] - knots[i]);
    (i, w)
}

/// Smoothness of `θ` just to the left of a point:
/// `θ(u) − θ(t) ≈ coeff · (t − u)^exponent` for `u ≤ t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPowerLaw {
    pub coeff: Vec<f64>,
    pub exponent: f64,
}

/// The pair `(θ(·), σ(·))` with its declared smoothness and stability metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCurve {
    pub id: String,
    pub d: usize,
    pub theta: ThetaCurve,
    pub sigma: SigmaCurve,
    pub declared_beta: f64,
    pub declared_rho: f64,
}

/// Grid used when a root-trajectory curve computes its declared radius.
pub const ROOT_GRID: usize = 1024;
const CONJUGATE_TOL: f64 = 1e-9;

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(format!("t = {t} is outside [0, 1]")))
    }
}

impl ParamCurve {
    /// Builds and validates a curve.
    pub fn new(
        id: impl Into<String>,
        theta: ThetaCurve,
        sigma: SigmaCurve,
        declared_beta: f64,
        declared_rho: f64,
    ) -> Result<Self> {
        let d = theta_dimension(&theta)?;
        validate_sigma(&sigma)?;
        if !(declared_beta > 0.0) {
            return Err(Error::validation("declared_beta must be positive"));
        }
        if !(declared_rho > 0.0 && declared_rho < 1.0) {
            return Err(Error::validation("declared_rho must lie in (0,1)"));
        }
        let curve = ParamCurve {
            id: id.into(),
            d,
            theta,
            sigma,
            declared_beta,
            declared_rho,
        };
        if let ThetaCurve::Roots(_) = &curve.theta {
            // Conjugate closure is checked on the grid.
            for i in 0..ROOT_GRID {
                let t = i as f64 / (ROOT_GRID - 1) as f64;
                curve.theta_at(t)?;
            }
        }
        Ok(curve)
    }

    /// Constant θ and σ.
    pub fn constant(theta: Vec<f64>, sigma: f64) -> Result<Self> {
        let rho = crate::tvar::spectral_radius(&theta)?.clamp(1e-6, 1.0 - 1e-9);
        Self::new(
            "constant",
            ThetaCurve::ClosedForm(ClosedForm::Constant { value: theta }),
            SigmaCurve::Constant(sigma),
            1.0,
            rho,
        )
    }

    /// One polynomial per coordinate of θ, constant σ.
    pub fn polynomial(coeffs: Vec<Vec<f64>>, sigma: f64, declared_beta: f64, declared_rho: f64) -> Result<Self> {
        Self::new(
            "polynomial",
            ThetaCurve::ClosedForm(ClosedForm::Polynomial {
                coeffs: coeffs.into_iter().map(Poly).collect(),
            }),
            SigmaCurve::Constant(sigma),
            declared_beta,
            declared_rho,
        )
    }

    /// Builds `θ(t)` from reciprocal-root trajectories.
    ///
    /// The declared stability radius is the largest root modulus over a
    /// uniform grid of [`ROOT_GRID`] points.
    pub fn from_roots(roots: Vec<RootPath>, sigma: SigmaCurve, declared_beta: f64) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::validation("at least one root trajectory is required"));
        }
        let mut worst: f64 = 0.0;
        for i in 0..ROOT_GRID {
            let t = i as f64 / (ROOT_GRID - 1) as f64;
            for r in &roots {
                worst = worst.max(r.eval(t).norm());
            }
        }
        if worst >= 1.0 {
            return Err(Error::validation(format!(
                "root trajectories reach modulus {worst}, outside the open unit disk"
            )));
        }
        Self::new(
            "roots",
            ThetaCurve::Roots(roots),
            sigma,
            declared_beta,
            worst.max(f64::MIN_POSITIVE),
        )
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.theta {
            ThetaCurve::ClosedForm(_) => "closed_form",
            ThetaCurve::Table { .. } => "table",
            ThetaCurve::Roots(_) => "roots",
        }
    }

    /// `(θ(t), σ(t))`.
    pub fn eval(&self, t: f64) -> Result<(Vec<f64>, f64)> {
        Ok((self.theta_at(t)?, self.sigma_at(t)?))
    }

    pub fn theta_at(&self, t: f64) -> Result<Vec<f64>> {
        check_t(t)?;
        Ok(match &self.theta {
            ThetaCurve::ClosedForm(cf) => match cf {
                ClosedForm::Constant { value } => value.clone(),
                ClosedForm::Polynomial { coeffs } => coeffs.iter().map(|p| p.eval(t)).collect(),
                ClosedForm::Cosine {
                    offset,
                    amplitude,
                    frequency,
                } => {
                    let c = (std::f64::consts::PI * frequency * t).cos();
                    offset.iter().zip(amplitude).map(|(o, a)| o + a * c).collect()
                }
                ClosedForm::PowerLaw {
                    anchor,
                    base,
                    coeff,
                    exponent,
                } => {
                    let s = (anchor - t).abs().powf(*exponent);
                    base.iter().zip(coeff).map(|(b, c)| b + c * s).collect()
                }
            },
            ThetaCurve::Table { knots, values } => {
                let (i, w) = locate(knots, t);
                if w == 0.0 {
                    values[i].clone()
                } else {
                    values[i]
                        .iter()
                        .zip(&values[i + 1])
                        .map(|(a, b)| (1.0 - w) * a + w * b)
                        .collect()
                }
            }
            ThetaCurve::Roots(roots) => {
                let lambdas: Vec<Complex64> = roots.iter().map(|r| r.eval(t)).collect();
                let c = expand_reciprocal_product(&lambdas);
                let residue = c.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
                if residue > CONJUGATE_TOL {
                    return Err(Error::validation(format!(
                        "root set at t = {t} is not closed under conjugation (imaginary residue {residue:e})"
                    )));
                }
                c[1..].iter().map(|z| -z.re).collect()
            }
        })
    }

    pub fn sigma_at(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let s = self.sigma.eval(t);
        if !(s >= 0.0) {
            return Err(Error::validation(format!("sigma({t}) = {s} is negative")));
        }
        Ok(s)
    }

    /// `θ̇(t)` for the families that register a derivative.
    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        check_t(t)?;
        match &self.theta {
            ThetaCurve::ClosedForm(cf) => match cf {
                ClosedForm::Constant { value } => Ok(vec![0.0; value.len()]),
                ClosedForm::Polynomial { coeffs } => Ok(coeffs.iter().map(|p| p.derivative(t)).collect()),
                ClosedForm::Cosine {
                    amplitude,
                    frequency,
                    ..
                } => {
                    let w = std::f64::consts::PI * frequency;
                    Ok(amplitude.iter().map(|a| -a * w * (w * t).sin()).collect())
                }
                ClosedForm::PowerLaw {
                    anchor,
                    coeff,
                    exponent,
                    ..
                } => {
                    let gap = anchor - t;
                    if gap == 0.0 {
                        if *exponent > 1.0 {
                            return Ok(vec![0.0; coeff.len()]);
                        }
                        return Err(Error::validation(format!(
                            "power-law curve is not differentiable at its anchor {anchor}"
                        )));
                    }
                    // d/dt |a − t|^e = −e·sign(a − t)·|a − t|^{e−1}
                    let s = -exponent * gap.signum() * gap.abs().powf(exponent - 1.0);
                    Ok(coeff.iter().map(|c| c * s).collect())
                }
            },
            _ => Err(Error::validation(format!(
                "curve '{}' of kind {} has no registered derivative",
                self.id,
                self.kind_name()
            ))),
        }
    }

    /// The coefficient `θ_{t,β}` of `θ(u) − θ(t) ≈ θ_{t,β}(t − u)^β` for `u ≤ t`.
    ///
    /// For differentiable points this is the Taylor case `β = 1`,
    /// `θ_{t,1} = −θ̇(t)`.
    pub fn local_power_law(&self, t: f64) -> Result<LocalPowerLaw> {
        if let ThetaCurve::ClosedForm(ClosedForm::PowerLaw {
            anchor,
            coeff,
            exponent,
            ..
        }) = &self.theta
        {
            if *anchor == t && *exponent <= 1.0 {
                return Ok(LocalPowerLaw {
                    coeff: coeff.clone(),
                    exponent: *exponent,
                });
            }
        }
        let deriv = self.derivative(t)?;
        Ok(LocalPowerLaw {
            coeff: deriv.iter().map(|v| -v).collect(),
            exponent: 1.0,
        })
    }

    /// Sup-norm of `θ` over a uniform grid.
    pub fn sup_norm(&self, grid_size: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..grid_size {
            let t = i as f64 / (grid_size - 1).max(1) as f64;
            worst = worst.max(crate::linalg::vec_norm(&self.theta_at(t)?));
        }
        Ok(worst)
    }
}

fn theta_dimension(theta: &ThetaCurve) -> Result<usize> {
    let d = match theta {
        ThetaCurve::ClosedForm(cf) => match cf {
            ClosedForm::Constant { value } => value.len(),
            ClosedForm::Polynomial { coeffs } => {
                if coeffs.iter().any(|p| p.0.is_empty()) {
                    return Err(Error::validation("polynomial coordinates need at least one coefficient"));
                }
                coeffs.len()
            }
            ClosedForm::Cosine {
                offset,
                amplitude,
                frequency,
            } => {
                if offset.len() != amplitude.len() {
                    return Err(Error::validation("cosine offset and amplitude lengths differ"));
                }
                if !frequency.is_finite() {
                    return Err(Error::validation("cosine frequency must be finite"));
                }
                offset.len()
            }
            ClosedForm::PowerLaw {
                anchor,
                base,
                coeff,
                exponent,
            } => {
                if base.len() != coeff.len() {
                    return Err(Error::validation("power-law base and coeff lengths differ"));
                }
                if !(0.0..=1.0).contains(anchor) {
                    return Err(Error::validation("power-law anchor must lie in [0,1]"));
                }
                if !(*exponent > 0.0) {
                    return Err(Error::validation("power-law exponent must be positive"));
                }
                base.len()
            }
        },
        ThetaCurve::Table { knots, values } => {
            if knots.len() < 2 || knots.len() != values.len() {
                return Err(Error::validation("table needs at least two knots with one value each"));
            }
            if knots.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::validation("table knots must be strictly increasing"));
            }
            if knots[0] > 0.0 || knots[knots.len() - 1] < 1.0 {
                return Err(Error::validation("table knots must cover [0,1]"));
            }
            let d = values[0].len();
            if values.iter().any(|v| v.len() != d) {
                return Err(Error::validation("table values have inconsistent dimensions"));
            }
            d
        }
        ThetaCurve::Roots(roots) => roots.len(),
    };
    if d == 0 {
        return Err(Error::validation("model order d must be positive"));
    }
    Ok(d)
}

fn validate_sigma(sigma: &SigmaCurve) -> Result<()> {
    match sigma {
        SigmaCurve::Constant(s) if !(*s >= 0.0 && s.is_finite()) => {
            Err(Error::validation("sigma must be a finite nonnegative number"))
        }
        SigmaCurve::Polynomial(p) if p.0.is_empty() => Err(Error::validation("sigma polynomial is empty")),
        SigmaCurve::Table { knots, values } => {
            if knots.len() < 2 || knots.len() != values.len() {
                return Err(Error::validation("sigma table needs at least two knots with one value each"));
            }
            if knots.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::validation("sigma table knots must be strictly increasing"));
            }
            if values.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::validation("sigma table values must be nonnegative"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve_eval() {
        let c = ParamCurve::constant(vec![0.5], 1.0).unwrap();
        assert_eq!(c.eval(0.3).unwrap(), (vec![0.5], 1.0));
    }

    #[test]
    fn table_interpolates_linearly() {
        let c = ParamCurve::new(
            "ramp",
            ThetaCurve::Table {
                knots: vec![0.0, 1.0],
                values: vec![vec![0.0], vec![1.0]],
            },
            SigmaCurve::Constant(2.0),
            1.0,
            0.99,
        )
        .unwrap();
        let (theta, sigma) = c.eval(0.25).unwrap();
        assert_eq!(theta, vec![0.25]);
        assert_eq!(sigma, 2.0);
    }

    #[test]
    fn linear_root_trajectory() {
        // λ(t) = 0.5 t, so θ(0.4) = 0.2.
        let c = ParamCurve::from_roots(
            vec![RootPath {
                modulus: Poly(vec![0.0, 0.5]),
                angle: Poly(vec![0.0]),
            }],
            SigmaCurve::Constant(1.0),
            1.0,
        )
        .unwrap();
        let theta = c.theta_at(0.4).unwrap();
        assert!((theta[0] - 0.2).abs() < 1e-15);
        assert!((c.declared_rho - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_roots_expand() {
        let single = ParamCurve::from_roots(
            vec![RootPath {
                modulus: Poly(vec![0.3]),
                angle: Poly(vec![0.0]),
            }],
            SigmaCurve::Constant(1.0),
            1.0,
        )
        .unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert!((single.theta_at(t).unwrap()[0] - 0.3).abs() < 1e-15);
        }

        let double = ParamCurve::from_roots(
            vec![
                RootPath {
                    modulus: Poly(vec![0.5]),
                    angle: Poly(vec![0.0]),
                };
                2
            ],
            SigmaCurve::Constant(1.0),
            1.0,
        )
        .unwrap();
        let theta = double.theta_at(0.7).unwrap();
        assert!((theta[0] - 1.0).abs() < 1e-15);
        assert!((theta[1] + 0.25).abs() < 1e-15);

        let third = std::f64::consts::PI / 3.0;
        let pair = ParamCurve::from_roots(
            vec![
                RootPath {
                    modulus: Poly(vec![0.5]),
                    angle: Poly(vec![third]),
                },
                RootPath {
                    modulus: Poly(vec![0.5]),
                    angle: Poly(vec![-third]),
                },
            ],
            SigmaCurve::Constant(1.0),
            1.0,
        )
        .unwrap();
        let theta = pair.theta_at(0.1).unwrap();
        assert!((theta[0] - 0.5).abs() < 1e-15);
        assert!((theta[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn unpaired_complex_root_is_rejected() {
        let err = ParamCurve::from_roots(
            vec![
                RootPath {
                    modulus: Poly(vec![0.5]),
                    angle: Poly(vec![1.0]),
                },
                RootPath {
                    modulus: Poly(vec![0.5]),
                    angle: Poly(vec![0.0]),
                },
            ],
            SigmaCurve::Constant(1.0),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn out_of_range_t() {
        let c = ParamCurve::constant(vec![0.5], 1.0).unwrap();
        assert!(matches!(c.eval(1.5), Err(Error::Domain(_))));
        assert!(matches!(c.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn derivatives_and_local_power_law() {
        let c = ParamCurve::polynomial(vec![vec![0.1, 0.2, 0.15]], 1.0, 2.0, 0.5).unwrap();
        let d = c.derivative(0.5).unwrap();
        assert!((d[0] - (0.2 + 0.3 * 0.5)).abs() < 1e-15);
        let lp = c.local_power_law(0.5).unwrap();
        assert_eq!(lp.exponent, 1.0);
        assert!((lp.coeff[0] + d[0]).abs() < 1e-15);

        let root = ParamCurve::new(
            "sqrt",
            ThetaCurve::ClosedForm(ClosedForm::PowerLaw {
                anchor: 1.0,
                base: vec![0.3],
                coeff: vec![0.2],
                exponent: 0.5,
            }),
            SigmaCurve::Constant(1.0),
            0.5,
            0.6,
        )
        .unwrap();
        let lp = root.local_power_law(1.0).unwrap();
        assert_eq!(lp.exponent, 0.5);
        assert_eq!(lp.coeff, vec![0.2]);
        assert!(root.derivative(1.0).is_err());

        let table = ParamCurve::new(
            "t",
            ThetaCurve::Table {
                knots: vec![0.0, 1.0],
                values: vec![vec![0.0], vec![0.1]],
            },
            SigmaCurve::Constant(1.0),
            1.0,
            0.5,
        )
        .unwrap();
        assert!(matches!(table.derivative(0.5), Err(Error::Validation(_))));
    }

    #[test]
    fn cosine_derivative_matches_finite_difference() {
        let c = ParamCurve::new(
            "cos",
            ThetaCurve::ClosedForm(ClosedForm::Cosine {
                offset: vec![0.0],
                amplitude: vec![0.45],
                frequency: 1.0,
            }),
            SigmaCurve::Constant(1.0),
            1.0,
            0.45,
        )
        .unwrap();
        let h = 1e-6;
        let t = 0.75;
        let fd = (c.theta_at(t + h).unwrap()[0] - c.theta_at(t - h).unwrap()[0]) / (2.0 * h);
        assert!((c.derivative(t).unwrap()[0] - fd).abs() < 1e-8);
    }
}
