use rand::Rng;
use rand_distr::{Beta, Distribution, Exp};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Declarative description of a cost or publication law.
///
/// `Normal` is truncated to `[0, 1]`: both sampling and the CDF are those of
/// the normal law conditioned on the unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform01,
    Beta { alpha: f64, beta: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Empirical { samples: Vec<f64> },
}

impl DistributionSpec {
    /// The truncated normal used for the "Normal" dishonest profile.
    pub fn dishonest_normal() -> Self {
        DistributionSpec::Normal {
            mean: 0.5,
            sd: 0.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    /// Checks parameters and precomputes what sampling and the CDF need.
    pub fn compile(&self) -> Result<Dist> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        }
        let inner = match *self {
            DistributionSpec::Uniform01 => Inner::Uniform,
            DistributionSpec::Beta { alpha, beta } => {
                positive("beta alpha", alpha)?;
                positive("beta beta", beta)?;
                let sampler =
                    Beta::new(alpha, beta).map_err(|e| Error::config(format!("beta: {e}")))?;
                let law = statrs::distribution::Beta::new(alpha, beta)
                    .map_err(|e| Error::config(format!("beta: {e}")))?;
                Inner::Beta { sampler, law }
            }
            DistributionSpec::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::config(format!(
                        "normal mean must be finite, got {mean}"
                    )));
                }
                positive("normal sd", sd)?;
                let std = Normal::new(0.0, 1.0).expect("standard normal");
                let lo = std.cdf((0.0 - mean) / sd);
                let hi = std.cdf((1.0 - mean) / sd);
                if hi - lo <= 1e-12 || (hi - lo).is_nan() {
                    return Err(Error::config(format!(
                        "normal({mean}, {sd}) has no mass on [0, 1]"
                    )));
                }
                Inner::TruncNormal {
                    mean,
                    sd,
                    lo,
                    hi,
                    std,
                }
            }
            DistributionSpec::Exponential { rate } => {
                positive("exponential rate", rate)?;
                let sampler = Exp::new(rate).map_err(|e| Error::config(format!("exp: {e}")))?;
                Inner::Exponential { rate, sampler }
            }
            DistributionSpec::Empirical { ref samples } => {
                if samples.is_empty() {
                    return Err(Error::config(
                        "empirical distribution needs at least one sample",
                    ));
                }
                if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
                    return Err(Error::config(format!(
                        "empirical sample {bad} is not finite"
                    )));
                }
                let mut sorted = samples.clone();
                sorted.sort_by(f64::total_cmp);
                Inner::Empirical {
                    samples: samples.clone(),
                    sorted,
                }
            }
        };
        Ok(Dist { inner })
    }

    /// One draw. Compiles the distribution on every call; hot loops should hold a [`Dist`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.compile()?.sample(rng))
    }
}

/// A validated [`DistributionSpec`] ready for sampling and evaluation.
#[derive(Debug, Clone)]
pub struct Dist {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Uniform,
    Beta {
        sampler: Beta<f64>,
        law: statrs::distribution::Beta,
    },
    TruncNormal {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
        std: Normal,
    },
    Exponential {
        rate: f64,
        sampler: Exp<f64>,
    },
    Empirical {
        samples: Vec<f64>,
        sorted: Vec<f64>,
    },
}

impl Dist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            Inner::Uniform => rng.random::<f64>(),
            Inner::Beta { sampler, .. } => sampler.sample(rng),
            Inner::TruncNormal {
                mean,
                sd,
                lo,
                hi,
                std,
            } => {
                // inverse-CDF draw restricted to the [0, 1] window
                let u = lo + (hi - lo) * rng.random::<f64>();
                (mean + sd * std.inverse_cdf(u)).clamp(0.0, 1.0)
            }
            Inner::Exponential { sampler, .. } => sampler.sample(rng),
            Inner::Empirical { samples, .. } => samples[rng.random_range(0..samples.len())],
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match &self.inner {
            Inner::Uniform => x.clamp(0.0, 1.0),
            Inner::Beta { law, .. } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    law.cdf(x)
                }
            }
            Inner::TruncNormal {
                mean,
                sd,
                lo,
                hi,
                std,
            } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    ((std.cdf((x - mean) / sd) - lo) / (hi - lo)).clamp(0.0, 1.0)
                }
            }
            Inner::Exponential { rate, .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Inner::Empirical { sorted, .. } => {
                sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
            }
        }
    }

    /// Modified distribution function `P(X < x) + lambda * P(X = x)`.
    ///
    /// Equal to [`Dist::cdf`] for continuous laws; for the empirical law the
    /// auxiliary `lambda` spreads each atom uniformly over its jump.
    pub fn pit(&self, x: f64, lambda: f64) -> f64 {
        match &self.inner {
            Inner::Empirical { sorted, .. } => {
                let below = sorted.partition_point(|&v| v < x);
                let at_or_below = sorted.partition_point(|&v| v <= x);
                let ties = at_or_below - below;
                (below as f64 + lambda * ties as f64) / sorted.len() as f64
            }
            _ => self.cdf(x),
        }
    }

    /// Density, or `None` for the (atomic) empirical law.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        let v = match &self.inner {
            Inner::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Inner::Beta { law, .. } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    law.pdf(x)
                }
            }
            Inner::TruncNormal {
                mean,
                sd,
                lo,
                hi,
                std,
            } => {
                if !(0.0..=1.0).contains(&x) {
                    0.0
                } else {
                    std.pdf((x - mean) / sd) / (sd * (hi - lo))
                }
            }
            Inner::Exponential { rate, .. } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Inner::Empirical { .. } => return None,
        };
        Some(v)
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self.inner, Inner::Empirical { .. })
    }

    /// Closed support interval; the upper end is infinite for the exponential.
    pub fn support(&self) -> (f64, f64) {
        match &self.inner {
            Inner::Exponential { .. } => (0.0, f64::INFINITY),
            Inner::Empirical { sorted, .. } => (sorted[0], sorted[sorted.len() - 1]),
            _ => (0.0, 1.0),
        }
    }

    /// Smallest `u` with `P(X > u) <= tail` for unbounded supports, else the
    /// upper support end.
    pub fn upper_quantile(&self, tail: f64) -> f64 {
        match &self.inner {
            Inner::Exponential { rate, .. } => -tail.ln() / rate,
            _ => self.support().1,
        }
    }

    pub fn rate(&self) -> Option<f64> {
        match &self.inner {
            Inner::Exponential { rate, .. } => Some(*rate),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_pvalue, ks_statistic, uniform_cdf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_draws_are_reproducible() {
        let spec = DistributionSpec::Uniform01;
        let a = spec.sample(&mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = spec.sample(&mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn beta_one_one_is_uniform() {
        let dist = DistributionSpec::Beta {
            alpha: 1.0,
            beta: 1.0,
        }
        .compile()
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
        let d = ks_statistic(&draws, uniform_cdf).unwrap();
        assert!(ks_pvalue(d, draws.len()) > 0.01, "d = {d}");
    }

    #[test]
    fn single_atom_empirical() {
        let dist = DistributionSpec::Empirical { samples: vec![0.5] }
            .compile()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..100).all(|_| dist.sample(&mut rng) == 0.5));
        assert_eq!(dist.cdf(0.49), 0.0);
        assert_eq!(dist.cdf(0.5), 1.0);
        assert_eq!(dist.pit(0.5, 0.3), 0.3);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = [
            DistributionSpec::Beta {
                alpha: 0.0,
                beta: 1.0,
            },
            DistributionSpec::Beta {
                alpha: 1.0,
                beta: f64::NAN,
            },
            DistributionSpec::Normal {
                mean: 0.5,
                sd: -1.0,
            },
            DistributionSpec::Normal {
                mean: 50.0,
                sd: 0.1,
            },
            DistributionSpec::Exponential { rate: 0.0 },
            DistributionSpec::Empirical { samples: vec![] },
            DistributionSpec::Empirical {
                samples: vec![f64::INFINITY],
            },
        ];
        for spec in bad {
            assert!(matches!(spec.validate(), Err(Error::Config(_))), "{spec:?}");
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            assert!(spec.sample(&mut rng).is_err());
        }
    }

    #[test]
    fn truncated_normal_stays_in_unit_interval() {
        let dist = DistributionSpec::dishonest_normal().compile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..20_000).map(|_| dist.sample(&mut rng)).collect();
        assert!(draws.iter().all(|x| (0.0..=1.0).contains(x)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((dist.cdf(0.5) - 0.5).abs() < 1e-12);
        assert_eq!(dist.cdf(0.0), 0.0);
        assert_eq!(dist.cdf(1.0), 1.0);
    }

    #[test]
    fn exponential_cdf_and_support() {
        let dist = DistributionSpec::Exponential { rate: 1.0 }
            .compile()
            .unwrap();
        assert_eq!(dist.cdf(0.0), 0.0);
        assert!((dist.cdf(std::f64::consts::LN_2) - 0.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!((0..1000).all(|_| dist.sample(&mut rng) >= 0.0));
        assert_eq!(dist.support().1, f64::INFINITY);
    }

    #[test]
    fn spec_serializes_with_kind_tag() {
        let spec = DistributionSpec::Beta {
            alpha: 1.0,
            beta: 0.7,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"beta","alpha":1.0,"beta":0.7}"#);
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let u: DistributionSpec = serde_json::from_str(r#"{"kind":"uniform01"}"#).unwrap();
        assert_eq!(u, DistributionSpec::Uniform01);
    }
}
