//! The conformal transducer. For a candidate response `y` at features `x`
//! the training sample is augmented with `(x, y)`, every row is scored, and
//! the plausibility is the fraction of rows scoring at least as high as the
//! appended one:
//!
//! ```text
//! pi(y) = #{i : T_i >= T_{n+1}} / (n + 1)
//! ```
//!
//! The rank of the appended score is `n + 2 - #{i : T_i >= T_{n+1}}`, so
//! `pi = (n + 2 - rank) / (n + 1)` holds by construction.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonconformity::{score_classification_nn, score_regression, NnScorer, PointPredictor};
use crate::types::{Adjustment, ContourTable, Dataset, Plausibility, Response, ResponseSpace};

/// Which nonconformity measure to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Psi {
    Regression(PointPredictor),
    ClassificationNn,
}

/// How the candidate grid for a continuous response is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// 201 equally spaced points over `[min y - r, max y + r]`, `r` the
    /// response range.
    Default,
    Uniform {
        lo: f64,
        hi: f64,
        points: usize,
    },
    Explicit(Vec<f64>),
}

pub const DEFAULT_GRID_POINTS: usize = 201;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransducerConfig {
    pub psi: Psi,
    pub grid: GridSpec,
}

impl TransducerConfig {
    pub fn classification() -> Self {
        Self {
            psi: Psi::ClassificationNn,
            grid: GridSpec::Default,
        }
    }

    pub fn regression(predictor: PointPredictor) -> Self {
        Self {
            psi: Psi::Regression(predictor),
            grid: GridSpec::Default,
        }
    }

    fn check_space(&self, space: &ResponseSpace) -> Result<()> {
        match (&self.psi, space) {
            (Psi::Regression(_), ResponseSpace::Continuous { .. })
            | (Psi::ClassificationNn, ResponseSpace::Labels(_)) => Ok(()),
            _ => Err(Error::SpaceMismatch(
                "nonconformity measure does not match the response space".into(),
            )),
        }
    }
}

/// Strictly increasing candidate responses, always containing the point
/// prediction at the query so the raw contour reaches 1 on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    pub points: Vec<f64>,
    pub point_prediction: f64,
}

impl CandidateGrid {
    pub fn build(
        train: &Dataset,
        x: &[f64],
        predictor: &PointPredictor,
        spec: &GridSpec,
    ) -> Result<Self> {
        let ys: Vec<f64> = train
            .observations
            .iter()
            .filter_map(|o| o.y.as_real())
            .collect();
        if ys.is_empty() {
            return Err(Error::InsufficientData { needed: 1, have: 0 });
        }
        let xs: Vec<&[f64]> = train.observations.iter().map(|o| o.x.as_slice()).collect();
        let mu = predictor.predict(&xs, &ys, x)?;
        let mut points = match spec {
            GridSpec::Default => {
                let lo_y = ys.iter().copied().fold(f64::INFINITY, f64::min);
                let hi_y = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut r = hi_y - lo_y;
                if r == 0.0 {
                    r = hi_y.abs().max(1.0);
                }
                linspace(lo_y - r, hi_y + r, DEFAULT_GRID_POINTS)
            }
            GridSpec::Uniform { lo, hi, points } => {
                if !(lo < hi) || *points < 2 || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidGrid(format!(
                        "need finite lo < hi and >= 2 points, got [{lo}, {hi}] x {points}"
                    )));
                }
                linspace(*lo, *hi, *points)
            }
            GridSpec::Explicit(p) => {
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidGrid("non-finite grid point".into()));
                }
                p.clone()
            }
        };
        points.push(mu);
        points.sort_by(f64::total_cmp);
        points.dedup();
        if let ResponseSpace::Continuous { lo, hi } = train.space {
            points.retain(|v| *v >= lo && *v <= hi);
        }
        if points.is_empty() {
            return Err(Error::InvalidGrid(
                "grid is empty inside the response space".into(),
            ));
        }
        Ok(Self {
            points,
            point_prediction: mu,
        })
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// The ranks the appended score can take across candidate labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PossibleRanks {
    pub ranks: BTreeSet<u64>,
    /// Rank for each label, in label order.
    pub by_label: Vec<(usize, u64)>,
    pub n: usize,
}

impl PossibleRanks {
    pub fn min(&self) -> u64 {
        *self
            .ranks
            .iter()
            .next()
            .expect("possible ranks are never empty")
    }
}

fn plaus(count: u64, n: usize) -> Plausibility {
    Plausibility::new(count, n as u64 + 1)
}

/// Rank of the appended score from its `>=` count.
pub fn rank_from_count(count: u64, n: usize) -> u64 {
    n as u64 + 2 - count
}

/// Plausibility of one candidate response, straight from the definition.
pub fn plausibility_at(
    train: &Dataset,
    x: &[f64],
    y: &Response,
    cfg: &TransducerConfig,
) -> Result<Plausibility> {
    cfg.check_space(&train.space)?;
    if !train.space.contains(y) {
        return Err(Error::SpaceMismatch(
            "candidate outside the response space".into(),
        ));
    }
    let n = train.len();
    if n == 0 {
        return Ok(Plausibility::from_integer(1));
    }
    let aug = train.augmented(x, *y);
    let scores = match &cfg.psi {
        Psi::Regression(p) => score_regression(&aug, p)?,
        Psi::ClassificationNn => score_classification_nn(&aug)?,
    };
    Ok(plaus(scores.conforming_count(), n))
}

/// `>=` counts for every label, in label order.
fn label_counts(train: &Dataset, x: &[f64]) -> Result<Vec<u64>> {
    let k = train.space.label_count();
    if !train.space.is_finite() {
        return Err(Error::SpaceMismatch(
            "classification needs a finite label space".into(),
        ));
    }
    if train.is_empty() {
        return Ok(vec![1; k]);
    }
    let scorer = NnScorer::new(train)?;
    let dist = scorer.distances(x);
    (0..k)
        .map(|label| Ok(scorer.scores(&dist, label)?.conforming_count()))
        .collect()
}

/// Raw contour over every label.
pub fn contour_classification(train: &Dataset, x: &[f64]) -> Result<ContourTable> {
    let n = train.len();
    let counts = label_counts(train, x)?;
    Ok(ContourTable {
        points: counts
            .into_iter()
            .enumerate()
            .map(|(l, c)| (Response::Label(l), plaus(c, n)))
            .collect(),
        n,
        adjusted: Adjustment::Raw,
    })
}

/// Ranks of the appended score across all candidate labels.
pub fn possible_ranks(train: &Dataset, x: &[f64]) -> Result<PossibleRanks> {
    let n = train.len();
    let by_label: Vec<(usize, u64)> = label_counts(train, x)?
        .into_iter()
        .enumerate()
        .map(|(l, c)| (l, rank_from_count(c, n)))
        .collect();
    Ok(PossibleRanks {
        ranks: by_label.iter().map(|&(_, r)| r).collect(),
        by_label,
        n,
    })
}

/// Raw contour over the candidate grid.
pub fn contour_regression(
    train: &Dataset,
    x: &[f64],
    cfg: &TransducerConfig,
) -> Result<ContourTable> {
    cfg.check_space(&train.space)?;
    let Psi::Regression(predictor) = cfg.psi else {
        unreachable!("checked by check_space")
    };
    let grid = CandidateGrid::build(train, x, &predictor, &cfg.grid)?;
    contour_on_points(train, x, &predictor, &grid.points)
}

/// Raw regression contour at the given candidate points, in order.
pub fn contour_on_points(
    train: &Dataset,
    x: &[f64],
    predictor: &PointPredictor,
    points: &[f64],
) -> Result<ContourTable> {
    let n = train.len();
    let values = crate::par::map(points, |&y| {
        let aug = train.augmented(x, Response::Real(y));
        score_regression(&aug, predictor).map(|s| plaus(s.conforming_count(), n))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ContourTable {
        points: points
            .iter()
            .zip(values)
            .map(|(&y, p)| (Response::Real(y), p))
            .collect(),
        n,
        adjusted: Adjustment::Raw,
    })
}

/// Raw contour for whichever kind of response the training set has.
pub fn contour(train: &Dataset, x: &[f64], cfg: &TransducerConfig) -> Result<ContourTable> {
    cfg.check_space(&train.space)?;
    match cfg.psi {
        Psi::ClassificationNn => contour_classification(train, x),
        Psi::Regression(_) => contour_regression(train, x, cfg),
    }
}
