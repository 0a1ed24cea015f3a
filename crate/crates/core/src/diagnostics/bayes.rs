//! Conjugate normal / inverse-gamma predictive: the precise baseline used
//! to show that an ordinary predictive distribution is not valid.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::types::{Assertion, Interval};

/// Prior `mu | s2 ~ N(m0, s2 / k0)`, `s2 ~ InvGamma(a0, b0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigPrior {
    pub m0: f64,
    pub k0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl Default for NigPrior {
    fn default() -> Self {
        Self {
            m0: 0.0,
            k0: 1.0,
            a0: 1.0,
            b0: 1.0,
        }
    }
}

/// Location-scale Student-t predictive for the next observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentTPredictive {
    pub df: f64,
    pub location: f64,
    pub scale: f64,
}

impl StudentTPredictive {
    fn dist(&self) -> StudentsT {
        StudentsT::new(self.location, self.scale, self.df).expect("validated parameters")
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            1.0
        } else if y == f64::NEG_INFINITY {
            0.0
        } else {
            self.dist().cdf(y)
        }
    }

    pub fn interval_prob(&self, i: &Interval) -> f64 {
        if i.is_empty() {
            return 0.0;
        }
        (self.cdf(i.hi) - self.cdf(i.lo)).max(0.0)
    }

    /// Probability of an interval-union assertion; label assertions get 0.
    pub fn prob(&self, a: &Assertion) -> f64 {
        match a {
            Assertion::Intervals(iv) => iv
                .iter()
                .map(|i| self.interval_prob(i))
                .sum::<f64>()
                .min(1.0),
            Assertion::Labels(_) => 0.0,
        }
    }
}

/// Posterior predictive after observing `ys`.
pub fn bayes_t_predictive(ys: &[f64], prior: NigPrior) -> Result<StudentTPredictive> {
    if ys.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    for (name, v) in [("k0", prior.k0), ("a0", prior.a0), ("b0", prior.b0)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidHyperparameter(format!("{name} = {v}")));
        }
    }
    if !prior.m0.is_finite() {
        return Err(Error::InvalidHyperparameter(format!("m0 = {}", prior.m0)));
    }
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let ss: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    let kn = prior.k0 + n;
    let mn = (prior.k0 * prior.m0 + n * mean) / kn;
    let an = prior.a0 + n / 2.0;
    let bn = prior.b0 + 0.5 * ss + prior.k0 * n * (mean - prior.m0).powi(2) / (2.0 * kn);
    Ok(StudentTPredictive {
        df: 2.0 * an,
        location: mn,
        scale: (bn * (kn + 1.0) / (an * kn)).sqrt(),
    })
}
