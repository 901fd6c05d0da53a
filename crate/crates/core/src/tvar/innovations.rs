use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnovationFamily {
    Gaussian,
    /// Uniform on `[−√3, √3]`.
    Uniform,
    /// Student t scaled by `√((df − 2)/df)`.
    StudentT { df: f64 },
}

/// Distribution of the normalized innovations: zero mean, unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationSpec {
    pub family: InnovationFamily,
    /// Order `q ≥ 2` of the finite-moment guarantee.
    pub moment_order: f64,
}

impl Default for InnovationSpec {
    fn default() -> Self {
        InnovationSpec {
            family: InnovationFamily::Gaussian,
            moment_order: 4.0,
        }
    }
}

impl InnovationSpec {
    pub fn gaussian() -> Self {
        Self::default()
    }

    pub fn uniform() -> Self {
        InnovationSpec {
            family: InnovationFamily::Uniform,
            moment_order: 4.0,
        }
    }

    pub fn student_t(df: f64, moment_order: f64) -> Result<Self> {
        let spec = InnovationSpec {
            family: InnovationFamily::StudentT { df },
            moment_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.moment_order >= 2.0) {
            return Err(Error::validation("moment order q must be at least 2"));
        }
        if let InnovationFamily::StudentT { df } = self.family {
            if !(df > 2.0) {
                return Err(Error::validation(format!(
                    "student_t needs df > 2 for a finite variance, got {df}"
                )));
            }
            if !(df > self.moment_order) {
                return Err(Error::validation(format!(
                    "student_t df = {df} must exceed the moment order q = {}",
                    self.moment_order
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            InnovationFamily::Gaussian => "gaussian",
            InnovationFamily::Uniform => "uniform",
            InnovationFamily::StudentT { .. } => "student_t",
        }
    }

    pub(crate) fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match self.family {
            InnovationFamily::Gaussian => Sampler::Gaussian,
            InnovationFamily::Uniform => Sampler::Uniform,
            InnovationFamily::StudentT { df } => Sampler::StudentT {
                dist: StudentT::new(df).map_err(|e| Error::validation(e.to_string()))?,
                scale: ((df - 2.0) / df).sqrt(),
            },
        })
    }
}

pub(crate) enum Sampler {
    Gaussian,
    Uniform,
    StudentT { dist: StudentT<f64>, scale: f64 },
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

impl Sampler {
    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Gaussian => StandardNormal.sample(rng),
            Sampler::Uniform => rng.random_range(-SQRT3..=SQRT3),
            Sampler::StudentT { dist, scale } => scale * dist.sample(rng),
        }
    }
}

/// `count` i.i.d. normalized innovations from the stream seeded by `stream_seed`.
pub fn sample_innovations(spec: &InnovationSpec, count: usize, stream_seed: u64) -> Result<Vec<f64>> {
    let sampler = spec.sampler()?;
    let mut rng = stream(stream_seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn empty_draw() {
        assert!(sample_innovations(&InnovationSpec::gaussian(), 0, 1).unwrap().is_empty());
    }

    #[test]
    fn uniform_support() {
        let x = sample_innovations(&InnovationSpec::uniform(), 100_000, 9).unwrap();
        assert!(x.iter().all(|v| v.abs() <= SQRT3));
        let (m, v) = moments(&x);
        assert!(m.abs() < 4.0 / (100_000f64).sqrt());
        assert!((v - 1.0).abs() < 0.02);
    }

    #[test]
    fn gaussian_moments_at_scale() {
        let x = sample_innovations(&InnovationSpec::gaussian(), 1_000_000, 2024).unwrap();
        let (m, v) = moments(&x);
        assert!(m.abs() < 4e-3, "mean {m}");
        assert!((v - 1.0).abs() < 1e-2, "var {v}");
    }

    #[test]
    fn student_t_is_unit_variance() {
        let spec = InnovationSpec::student_t(10.0, 4.0).unwrap();
        let x = sample_innovations(&spec, 400_000, 5).unwrap();
        let (m, v) = moments(&x);
        assert!(m.abs() < 0.01);
        assert!((v - 1.0).abs() < 0.03, "var {v}");
    }

    #[test]
    fn student_t_validation() {
        assert!(matches!(InnovationSpec::student_t(2.0, 2.0), Err(Error::Validation(_))));
        assert!(matches!(InnovationSpec::student_t(1.5, 2.0), Err(Error::Validation(_))));
        assert!(matches!(InnovationSpec::student_t(4.0, 6.0), Err(Error::Validation(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = sample_innovations(&InnovationSpec::gaussian(), 16, 77).unwrap();
        let b = sample_innovations(&InnovationSpec::gaussian(), 16, 77).unwrap();
        assert_eq!(a, b);
    }
}
