//! Seeded data generators for Monte Carlo diagnostics.
//!
//! Every replicate draws from its own ChaCha8 stream: the key is the run
//! seed and the stream id is the replicate index, so replicate `r` yields
//! the same observations whether it runs first, last, or on another thread.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, Observation, Response, ResponseSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeanFunction {
    /// `sin^3(2 pi x^3)`.
    SinCubed,
}

impl MeanFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            MeanFunction::SinCubed => (2.0 * std::f64::consts::PI * x.powi(3)).sin().powi(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    /// iid `Unif(lo, hi)` responses with a constant one-dimensional feature.
    UniformIid { lo: f64, hi: f64 },
    /// `X ~ Unif(0, 1)`, `Y = mean(X) + scale * t_df`.
    RegressionSynthetic {
        mean: MeanFunction,
        df: f64,
        scale: f64,
    },
    /// Label drawn from `label_probs`; one feature drawn from
    /// `Normal(means[label], sd)` and rounded to a multiple of `resolution`
    /// (0 disables rounding). Rounding produces tied distances.
    ClassificationSynthetic {
        label_probs: Vec<f64>,
        means: Vec<f64>,
        sd: f64,
        resolution: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: Generator,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: Generator, seed: u64) -> Result<Self> {
        let spec = Self { kind, seed };
        spec.check()?;
        Ok(spec)
    }

    /// The regression example: `sin^3(2 pi x^3)` plus `0.1 t_5` noise.
    pub fn sin_cubed(seed: u64) -> Self {
        Self {
            kind: Generator::RegressionSynthetic {
                mean: MeanFunction::SinCubed,
                df: 5.0,
                scale: 0.1,
            },
            seed,
        }
    }

    /// Three labels with overlapping, rounded one-dimensional features.
    pub fn three_labels(seed: u64) -> Self {
        Self {
            kind: Generator::ClassificationSynthetic {
                label_probs: vec![0.4, 0.35, 0.25],
                means: vec![0.0, 1.0, 2.0],
                sd: 0.8,
                resolution: 0.1,
            },
            seed,
        }
    }

    pub fn uniform(lo: f64, hi: f64, seed: u64) -> Self {
        Self {
            kind: Generator::UniformIid { lo, hi },
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match &self.kind {
            Generator::UniformIid { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return bad("uniform generator needs finite lo < hi");
                }
            }
            Generator::RegressionSynthetic { df, scale, .. } => {
                if !(*df > 0.0) || !(*scale >= 0.0) {
                    return bad("regression generator needs df > 0 and scale >= 0");
                }
            }
            Generator::ClassificationSynthetic {
                label_probs,
                means,
                sd,
                resolution,
            } => {
                if label_probs.is_empty()
                    || label_probs.len() != means.len()
                    || label_probs.iter().any(|p| !(*p >= 0.0))
                    || label_probs.iter().sum::<f64>() <= 0.0
                {
                    return bad("classification generator needs matching non-negative label weights and means");
                }
                if !(*sd > 0.0) || !(*resolution >= 0.0) {
                    return bad("classification generator needs sd > 0 and resolution >= 0");
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> ResponseSpace {
        match &self.kind {
            Generator::UniformIid { lo, hi } => ResponseSpace::Continuous { lo: *lo, hi: *hi },
            Generator::RegressionSynthetic { .. } => ResponseSpace::real_line(),
            Generator::ClassificationSynthetic { label_probs, .. } => ResponseSpace::Labels(
                (0..label_probs.len())
                    .map(|i| ((b'A' + (i % 26) as u8) as char).to_string() + &"'".repeat(i / 26))
                    .collect(),
            ),
        }
    }

    /// The random stream for one replicate.
    pub fn rng(&self, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate);
        rng
    }

    /// Draws `count` iid observations for one replicate.
    pub fn sample(&self, replicate: u64, count: usize) -> Dataset {
        let mut rng = self.rng(replicate);
        let observations = match &self.kind {
            Generator::UniformIid { lo, hi } => (0..count)
                .map(|_| Observation::new(vec![0.0], Response::Real(rng.random_range(*lo..*hi))))
                .collect(),
            Generator::RegressionSynthetic { mean, df, scale } => {
                let t = StudentT::new(*df).expect("checked df");
                (0..count)
                    .map(|_| {
                        let x: f64 = rng.random();
                        let y = mean.eval(x) + scale * t.sample(&mut rng);
                        Observation::new(vec![x], Response::Real(y))
                    })
                    .collect()
            }
            Generator::ClassificationSynthetic {
                label_probs,
                means,
                sd,
                resolution,
            } => {
                let pick = WeightedIndex::new(label_probs).expect("checked weights");
                let noise = Normal::new(0.0, *sd).expect("checked sd");
                (0..count)
                    .map(|_| {
                        let l = pick.sample(&mut rng);
                        let mut x = means[l] + noise.sample(&mut rng);
                        if *resolution > 0.0 {
                            x = (x / resolution).round() * resolution;
                        }
                        Observation::new(vec![x], Response::Label(l))
                    })
                    .collect()
            }
        };
        Dataset::new(self.space(), observations)
    }
}
