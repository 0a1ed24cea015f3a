//! Nonconformity measures: symmetric scores of how much one row of an
//! augmented sample disagrees with the others.
//!
//! Two measures are provided. For regression, the absolute leave-one-out
//! residual `|y_i - mu_{-i}(x_i)|` under a pluggable point predictor. For
//! classification, the nearest-neighbour distance ratio
//!
//! ```text
//! T_i = min_{j != i, y_j = y_i} d(x_j, x_i) / min_{j != i, y_j != y_i} d(x_j, x_i)
//! ```
//!
//! with `0/0 = 0`, `inf/inf = 0`, and a positive numerator over a zero
//! denominator mapped to `f64::INFINITY`, which orders above every finite
//! score.

#![allow(clippy::needless_range_loop)]

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, ResponseSpace};

/// Mean-response estimator used inside the absolute-residual score.
/// Predictions are symmetric functions of the training multiset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PointPredictor {
    /// Average response of the `k` nearest training rows; every row tied
    /// with the k-th distance is included.
    KnnMean { k: usize },
    /// Ridge regression with an unpenalised intercept.
    Ridge { lambda: f64 },
}

impl PointPredictor {
    pub fn check(&self) -> Result<()> {
        match *self {
            PointPredictor::KnnMean { k: 0 } => {
                Err(Error::InvalidArgument("knn-mean needs k >= 1".into()))
            }
            PointPredictor::Ridge { lambda } if !(lambda >= 0.0) || !lambda.is_finite() => Err(
                Error::InvalidArgument(format!("ridge lambda must be >= 0, got {lambda}")),
            ),
            _ => Ok(()),
        }
    }

    /// Fits on `(xs, ys)` and predicts at `x`.
    pub fn predict(&self, xs: &[&[f64]], ys: &[f64], x: &[f64]) -> Result<f64> {
        self.check()?;
        match *self {
            PointPredictor::KnnMean { k } => knn_mean(xs, ys, x, k),
            PointPredictor::Ridge { lambda } => ridge_predict(xs, ys, x, lambda),
        }
    }
}

/// Which measure produced a [`ScoreVector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScoreKind {
    AbsoluteResidual(PointPredictor),
    NearestNeighbourRatio,
}

/// Scores `T_1, ..., T_{n+1}` of an augmented sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub provenance: ScoreKind,
}

impl ScoreVector {
    /// The score of the appended row.
    pub fn last(&self) -> f64 {
        *self.scores.last().expect("score vector is never empty")
    }

    /// `#{i : T_i >= T_{n+1}}`.
    pub fn conforming_count(&self) -> u64 {
        let t = self.last();
        self.scores.iter().filter(|&&s| s >= t).count() as u64
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Nearest-neighbour ratio with the conventions for zero and infinite
/// distances.
pub fn nn_ratio(same: f64, other: f64) -> f64 {
    if (same == 0.0 && other == 0.0) || (same.is_infinite() && other.is_infinite()) {
        0.0
    } else if other == 0.0 || same.is_infinite() {
        f64::INFINITY
    } else {
        same / other
    }
}

/// Absolute leave-one-out residuals of an augmented regression sample.
pub fn score_regression(augmented: &Dataset, predictor: &PointPredictor) -> Result<ScoreVector> {
    predictor.check()?;
    if !matches!(augmented.space, ResponseSpace::Continuous { .. }) {
        return Err(Error::SpaceMismatch(
            "absolute-residual score needs a continuous response".into(),
        ));
    }
    let m = augmented.len();
    if m < 2 {
        return Err(Error::InsufficientData { needed: 2, have: m });
    }
    if let PointPredictor::KnnMean { k } = *predictor {
        if k > m - 1 {
            return Err(Error::InsufficientData {
                needed: k + 1,
                have: m,
            });
        }
    }
    let ys: Vec<f64> = augmented
        .observations
        .iter()
        .map(|o| {
            o.y.as_real()
                .ok_or_else(|| Error::SpaceMismatch("label response in regression".into()))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<&[f64]> = augmented
        .observations
        .iter()
        .map(|o| o.x.as_slice())
        .collect();

    let mut scores = Vec::with_capacity(m);
    let mut xs_minus: Vec<&[f64]> = Vec::with_capacity(m - 1);
    let mut ys_minus: Vec<f64> = Vec::with_capacity(m - 1);
    for i in 0..m {
        xs_minus.clear();
        ys_minus.clear();
        for j in (0..m).filter(|&j| j != i) {
            xs_minus.push(xs[j]);
            ys_minus.push(ys[j]);
        }
        let mu = predictor.predict(&xs_minus, &ys_minus, xs[i])?;
        scores.push((ys[i] - mu).abs());
    }
    Ok(ScoreVector {
        scores,
        provenance: ScoreKind::AbsoluteResidual(*predictor),
    })
}

/// Nearest-neighbour ratio scores of an augmented classification sample.
pub fn score_classification_nn(augmented: &Dataset) -> Result<ScoreVector> {
    let m = augmented.len();
    if m < 2 {
        return Err(Error::FewerThanTwoRows(m));
    }
    let labels = label_column(augmented)?;
    let obs = &augmented.observations;
    let scores = (0..m)
        .map(|i| {
            let mut same = f64::INFINITY;
            let mut other = f64::INFINITY;
            for j in (0..m).filter(|&j| j != i) {
                let d = euclidean(&obs[i].x, &obs[j].x);
                if labels[j] == labels[i] {
                    same = same.min(d);
                } else {
                    other = other.min(d);
                }
            }
            nn_ratio(same, other)
        })
        .collect();
    Ok(ScoreVector {
        scores,
        provenance: ScoreKind::NearestNeighbourRatio,
    })
}

fn label_column(d: &Dataset) -> Result<Vec<usize>> {
    d.observations
        .iter()
        .map(|o| {
            o.y.as_label()
                .ok_or_else(|| Error::SpaceMismatch("real response in classification".into()))
        })
        .collect()
}

/// Cached nearest-neighbour scorer for one training set.
///
/// Training-to-training minima are computed once; scoring a candidate row
/// `(x, label)` then costs `O(n d)`. Distances and minima are the same
/// floating values [`score_classification_nn`] computes, so both routes
/// return identical scores.
#[derive(Debug, Clone)]
pub struct NnScorer<'a> {
    train: &'a Dataset,
    labels: Vec<usize>,
    same: Vec<f64>,
    other: Vec<f64>,
}

impl<'a> NnScorer<'a> {
    pub fn new(train: &'a Dataset) -> Result<Self> {
        let labels = label_column(train)?;
        let n = train.len();
        let mut same = vec![f64::INFINITY; n];
        let mut other = vec![f64::INFINITY; n];
        let obs = &train.observations;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&obs[i].x, &obs[j].x);
                let slot = if labels[i] == labels[j] {
                    &mut same
                } else {
                    &mut other
                };
                slot[i] = slot[i].min(d);
                slot[j] = slot[j].min(d);
            }
        }
        Ok(Self {
            train,
            labels,
            same,
            other,
        })
    }

    /// Distances from a query point to every training row.
    pub fn distances(&self, x: &[f64]) -> Vec<f64> {
        self.train
            .observations
            .iter()
            .map(|o| euclidean(x, &o.x))
            .collect()
    }

    /// Scores of the training set augmented with `(x, label)`, given the
    /// distances from [`NnScorer::distances`].
    pub fn scores(&self, dist: &[f64], label: usize) -> Result<ScoreVector> {
        let n = self.train.len();
        if n < 1 {
            return Err(Error::FewerThanTwoRows(n + 1));
        }
        let mut scores = Vec::with_capacity(n + 1);
        let mut cand_same = f64::INFINITY;
        let mut cand_other = f64::INFINITY;
        for i in 0..n {
            let (mut s, mut o) = (self.same[i], self.other[i]);
            if self.labels[i] == label {
                s = s.min(dist[i]);
                cand_same = cand_same.min(dist[i]);
            } else {
                o = o.min(dist[i]);
                cand_other = cand_other.min(dist[i]);
            }
            scores.push(nn_ratio(s, o));
        }
        scores.push(nn_ratio(cand_same, cand_other));
        Ok(ScoreVector {
            scores,
            provenance: ScoreKind::NearestNeighbourRatio,
        })
    }
}

fn knn_mean(xs: &[&[f64]], ys: &[f64], x: &[f64], k: usize) -> Result<f64> {
    if xs.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            have: xs.len(),
        });
    }
    let mut by_dist: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .map(|(xi, &yi)| (euclidean(xi, x), yi))
        .collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cutoff = by_dist[k - 1].0;
    let mut chosen: Vec<f64> = by_dist
        .iter()
        .take_while(|(d, _)| *d <= cutoff)
        .map(|(_, y)| *y)
        .collect();
    // Canonical summation order keeps the mean independent of row order.
    chosen.sort_by(f64::total_cmp);
    Ok(chosen.iter().sum::<f64>() / chosen.len() as f64)
}

fn ridge_predict(xs: &[&[f64]], ys: &[f64], x: &[f64], lambda: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let p = x.len() + 1;
    // Accumulate the normal equations over rows in a canonical order.
    let mut rows: Vec<(&[f64], f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    rows.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(a.1.total_cmp(&b.1))
    });
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut z = vec![0.0; p];
    for (xi, yi) in rows {
        z[0] = 1.0;
        z[1..].copy_from_slice(xi);
        for a in 0..p {
            rhs[a] += z[a] * yi;
            for b in 0..p {
                gram[a][b] += z[a] * z[b];
            }
        }
    }
    for (a, row) in gram.iter_mut().enumerate().skip(1) {
        row[a] += lambda;
    }
    let beta = solve(gram, rhs).ok_or(Error::SingularDesign)?;
    Ok(beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
}

/// Gaussian elimination with partial pivoting; `None` when a pivot is
/// negligible relative to the matrix scale.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let p = b.len();
    let scale = a
        .iter()
        .enumerate()
        .map(|(i, r)| r[i].abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = scale * 1e-12;
    for col in 0..p {
        let piv = (col..p).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() <= tol {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..p {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..p {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut out = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = ((r + 1)..p).map(|c| a[r][c] * out[c]).sum();
        out[r] = (b[r] - s) / a[r][r];
    }
    Some(out)
}
