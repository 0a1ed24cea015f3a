//! Monte Carlo checks of predictor validity.
//!
//! [`validity_sweep`] estimates the distribution function of the
//! plausibility assigned to the realised response; a uniformly valid
//! predictor keeps it at or below the diagonal. [`f_curve`] estimates
//! `f(alpha) = P{upper(A) <= alpha, Y in A}` for one assertion, which a
//! valid predictor keeps at or below `alpha`.
//!
//! Replicates are independent and keyed by index, and the aggregates are
//! plain counts, so reports are identical however the work is scheduled.

mod bayes;
mod generators;

pub use bayes::{bayes_t_predictive, NigPrior, StudentTPredictive};
pub use generators::{Generator, GeneratorSpec, MeanFunction};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::possibility::{adjust, build_predictor};
use crate::transducer::{self, contour_on_points, CandidateGrid, Psi, TransducerConfig};
use crate::types::{
    plaus_to_f64, Adjustment, Assertion, Dataset, Plausibility, PossibilityPredictor, Response,
    ResponseSpace,
};

/// Evenly spaced levels `step, 2 step, ..., 1`.
pub fn alpha_grid(step: f64) -> Vec<f64> {
    let k = (1.0 / step).round() as usize;
    (1..=k).map(|i| i as f64 / k as f64).collect()
}

fn binomial_se(p: f64, reps: u64) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("alpha grid is empty".into()));
    }
    for &a in alphas {
        crate::predsets::check_alpha(a)?;
    }
    Ok(())
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Empirical distribution of `pi(Y_{n+1})` over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub alphas: Vec<f64>,
    pub cdf: Vec<f64>,
    pub stderr: Vec<f64>,
    pub reps: u64,
    pub n: usize,
    pub adjustment: Adjustment,
    /// Plausibility of the realised response, one per replicate.
    pub values: Vec<Plausibility>,
}

impl ValidityReport {
    /// Counts of replicates at each level `k/(n+1)`, `k = 1..=n+1`. Values
    /// off the lattice (conditioned contours) are not counted.
    pub fn level_counts(&self) -> Vec<u64> {
        let m = self.n as u64 + 1;
        let mut counts = vec![0u64; m as usize];
        for v in &self.values {
            let scaled = *v * m;
            if scaled.is_integer() {
                let k = scaled.to_integer();
                if (1..=m).contains(&k) {
                    counts[(k - 1) as usize] += 1;
                }
            }
        }
        counts
    }

    /// Goodness of fit of the level counts against the discrete uniform law
    /// on `{1/(n+1), ..., 1}`.
    pub fn chi_square_uniform(&self) -> ChiSquare {
        let counts = self.level_counts();
        let expected = self.reps as f64 / counts.len() as f64;
        let statistic = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let df = counts.len().saturating_sub(1).max(1);
        let p_value = ChiSquared::new(df as f64)
            .map(|d| d.sf(statistic))
            .unwrap_or(f64::NAN);
        ChiSquare {
            statistic,
            df,
            p_value,
        }
    }

    /// Levels at which the estimate exceeds `alpha + k * stderr`.
    pub fn violations(&self, k_se: f64) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.cdf)
            .zip(&self.stderr)
            .filter(|((a, f), s)| **f > **a + k_se * **s)
            .map(|((a, _), _)| *a)
            .collect()
    }
}

/// Plausibility assigned to the realised last row of `sample`.
fn realised_plausibility(
    sample: &Dataset,
    cfg: &TransducerConfig,
    adjustment: Adjustment,
) -> Result<Plausibility> {
    let n = sample.len() - 1;
    let train = sample.select(&(0..n).collect::<Vec<_>>());
    let last = &sample.observations[n];
    match cfg.psi {
        Psi::Regression(_) => transducer::plausibility_at(&train, &last.x, &last.y, cfg),
        Psi::ClassificationNn => {
            let label = last.y.as_label().ok_or_else(|| {
                Error::SpaceMismatch("generator produced a real response for classification".into())
            })?;
            let raw = transducer::contour_classification(&train, &last.x)?;
            let c = adjust(&raw, adjustment)?;
            Ok(c.label_value(label).expect("every label is in the contour"))
        }
    }
}

/// Simulates `reps` samples of size `n + 1` and records the plausibility of
/// the held-out response.
pub fn validity_sweep(
    gen: &GeneratorSpec,
    n: usize,
    cfg: &TransducerConfig,
    adjustment: Adjustment,
    reps: u64,
    alphas: &[f64],
) -> Result<ValidityReport> {
    gen.check()?;
    check_alphas(alphas)?;
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let values = crate::par::map_range(reps, |r| {
        realised_plausibility(&gen.sample(r, n + 1), cfg, adjustment)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let as_f64: Vec<f64> = values.iter().map(|v| plaus_to_f64(*v)).collect();
    let cdf: Vec<f64> = alphas
        .iter()
        .map(|&a| as_f64.iter().filter(|&&v| v <= a).count() as f64 / reps as f64)
        .collect();
    let stderr = cdf.iter().map(|&p| binomial_se(p, reps)).collect();
    Ok(ValidityReport {
        alphas: alphas.to_vec(),
        cdf,
        stderr,
        reps,
        n,
        adjustment,
        values,
    })
}

/// The predictor whose reliability an [`FCurve`] measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FPredictor {
    Conformal {
        cfg: TransducerConfig,
        adjustment: Adjustment,
    },
    BayesT(NigPrior),
}

impl FPredictor {
    pub fn id(&self) -> String {
        match self {
            FPredictor::Conformal { adjustment, .. } => format!("conformal-{adjustment}"),
            FPredictor::BayesT(p) => {
                format!("bayes-t(m0={},k0={},a0={},b0={})", p.m0, p.k0, p.a0, p.b0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FCurve {
    pub alphas: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub reps: u64,
    pub assertion: Assertion,
    pub predictor: String,
}

impl FCurve {
    /// Levels at which the estimate exceeds `alpha + k * stderr`.
    pub fn violations(&self, k_se: f64) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.estimates)
            .zip(&self.stderr)
            .filter(|((a, f), s)| **f > **a + k_se * **s)
            .map(|((a, _), _)| *a)
            .collect()
    }
}

const ASSERTION_GRID_POINTS: usize = 101;

/// Upper probability of an interval assertion on a regression predictor,
/// taken over the default grid refined inside the assertion.
fn conformal_upper_continuous(
    train: &Dataset,
    x: &[f64],
    cfg: &TransducerConfig,
    a: &Assertion,
) -> Result<f64> {
    let Psi::Regression(predictor) = cfg.psi else {
        unreachable!("continuous space implies a regression measure")
    };
    let Assertion::Intervals(iv) = a else {
        return Err(Error::SpaceMismatch(
            "label assertion on a continuous response".into(),
        ));
    };
    let (lo, hi) = match train.space {
        ResponseSpace::Continuous { lo, hi } => (lo, hi),
        ResponseSpace::Labels(_) => unreachable!(),
    };
    let grid = CandidateGrid::build(train, x, &predictor, &cfg.grid)?;
    let mut points: Vec<f64> = grid
        .points
        .into_iter()
        .filter(|y| a.contains(&Response::Real(*y)))
        .collect();
    for i in iv.iter().filter(|i| !i.is_empty()) {
        let a_lo = i.lo.max(lo).max(-1e12);
        let a_hi = i.hi.min(hi).min(1e12);
        if a_lo > a_hi {
            continue;
        }
        let step = (a_hi - a_lo) / (ASSERTION_GRID_POINTS - 1) as f64;
        points.extend(
            (0..ASSERTION_GRID_POINTS)
                .map(|k| a_lo + step * k as f64)
                .filter(|y| i.contains(*y)),
        );
    }
    if points.is_empty() {
        return Ok(0.0);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let c = contour_on_points(train, x, &predictor, &points)?;
    Ok(c.max().map(plaus_to_f64).unwrap_or(0.0))
}

fn upper_for(predictor: &FPredictor, train: &Dataset, x: &[f64], a: &Assertion) -> Result<f64> {
    match predictor {
        FPredictor::BayesT(prior) => {
            let ys: Vec<f64> = train
                .observations
                .iter()
                .filter_map(|o| o.y.as_real())
                .collect();
            Ok(bayes_t_predictive(&ys, *prior)?.prob(a))
        }
        FPredictor::Conformal { cfg, adjustment } => {
            if train.space.is_finite() || train.is_empty() {
                let p: PossibilityPredictor = build_predictor(train, x, cfg, *adjustment)?;
                Ok(plaus_to_f64(p.upper(a)))
            } else {
                conformal_upper_continuous(train, x, cfg, a)
            }
        }
    }
}

/// Estimates `f(alpha) = P{upper(A) <= alpha and Y_{n+1} in A}`.
pub fn f_curve(
    gen: &GeneratorSpec,
    n: usize,
    predictor: &FPredictor,
    assertion: &Assertion,
    reps: u64,
    alphas: &[f64],
) -> Result<FCurve> {
    gen.check()?;
    check_alphas(alphas)?;
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    assertion.validate(&gen.space())?;
    let draws = crate::par::map_range(reps, |r| -> Result<(f64, bool)> {
        let sample = gen.sample(r, n + 1);
        let train = sample.select(&(0..n).collect::<Vec<_>>());
        let last = &sample.observations[n];
        let inside = assertion.contains(&last.y);
        if !inside {
            // Only replicates with Y in A contribute; skip the predictor.
            return Ok((f64::INFINITY, false));
        }
        Ok((upper_for(predictor, &train, &last.x, assertion)?, true))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            draws
                .iter()
                .filter(|(u, inside)| *inside && *u <= a)
                .count() as f64
                / reps as f64
        })
        .collect();
    let stderr = estimates.iter().map(|&p| binomial_se(p, reps)).collect();
    Ok(FCurve {
        alphas: alphas.to_vec(),
        estimates,
        stderr,
        reps,
        assertion: assertion.clone(),
        predictor: predictor.id(),
    })
}
