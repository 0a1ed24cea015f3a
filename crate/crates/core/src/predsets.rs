//! Prediction sets `{y : pi(y) > alpha}` and their empirical coverage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::possibility::build_predictor;
use crate::transducer::{plausibility_at, Psi, TransducerConfig};
use crate::types::{
    plaus_to_f64, Adjustment, Dataset, PossibilityPredictor, Response, ResponseSpace,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SetKind {
    Labels(Vec<usize>),
    /// Closed intervals spanning runs of qualifying grid points.
    Intervals(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub kind: SetKind,
    pub alpha: f64,
}

impl PredictionSet {
    pub fn is_empty(&self) -> bool {
        match &self.kind {
            SetKind::Labels(l) => l.is_empty(),
            SetKind::Intervals(iv) => iv.is_empty(),
        }
    }

    /// Cardinality for labels, total length for intervals.
    pub fn size(&self) -> f64 {
        match &self.kind {
            SetKind::Labels(l) => l.len() as f64,
            SetKind::Intervals(iv) => iv.iter().map(|(a, b)| b - a).sum(),
        }
    }

    pub fn contains(&self, y: &Response) -> bool {
        match (&self.kind, y) {
            (SetKind::Labels(l), Response::Label(i)) => l.contains(i),
            (SetKind::Intervals(iv), Response::Real(v)) => iv.iter().any(|(a, b)| a <= v && v <= b),
            _ => false,
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Thresholds the contour strictly above `alpha`.
pub fn prediction_set(p: &PossibilityPredictor, alpha: f64) -> Result<PredictionSet> {
    check_alpha(alpha)?;
    let kind = match (&p.space, p.vacuous) {
        (ResponseSpace::Labels(l), true) => SetKind::Labels(if alpha < 1.0 {
            (0..l.len()).collect()
        } else {
            vec![]
        }),
        (ResponseSpace::Continuous { lo, hi }, true) => SetKind::Intervals(if alpha < 1.0 {
            vec![(*lo, *hi)]
        } else {
            vec![]
        }),
        (ResponseSpace::Labels(_), false) => SetKind::Labels(
            p.contour
                .points
                .iter()
                .filter(|(_, v)| plaus_to_f64(*v) > alpha)
                .filter_map(|(r, _)| r.as_label())
                .collect(),
        ),
        (ResponseSpace::Continuous { .. }, false) => {
            let mut runs: Vec<(f64, f64)> = Vec::new();
            let mut open: Option<(f64, f64)> = None;
            for (r, v) in &p.contour.points {
                let y = r.as_real().unwrap_or(f64::NAN);
                if plaus_to_f64(*v) > alpha {
                    open = Some(match open {
                        Some((a, _)) => (a, y),
                        None => (y, y),
                    });
                } else if let Some(run) = open.take() {
                    runs.push(run);
                }
            }
            runs.extend(open);
            SetKind::Intervals(runs)
        }
    };
    Ok(PredictionSet { kind, alpha })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub alpha: f64,
    pub adjustment: Adjustment,
    pub n_test: usize,
    pub empirical_coverage: f64,
    pub mean_size: f64,
}

/// Builds a predictor from `train` at every test row and records whether
/// the true response lands in the alpha-set and how large the set is.
///
/// For regression, membership is decided by the exact plausibility of the
/// true response; the size is measured on the grid.
pub fn evaluate_coverage(
    train: &Dataset,
    test: &Dataset,
    cfg: &TransducerConfig,
    adjustment: Adjustment,
    alpha: f64,
) -> Result<CoverageReport> {
    check_alpha(alpha)?;
    if test.is_empty() {
        return Err(Error::InvalidArgument("test set is empty".into()));
    }
    if train.space != test.space {
        return Err(Error::SpaceMismatch(
            "train and test response spaces differ".into(),
        ));
    }
    let rows = crate::par::map(&test.observations, |o| -> Result<(bool, f64)> {
        let p = build_predictor(train, &o.x, cfg, adjustment)?;
        let set = prediction_set(&p, alpha)?;
        let covered = match cfg.psi {
            Psi::ClassificationNn => set.contains(&o.y),
            Psi::Regression(_) if train.is_empty() => set.contains(&o.y),
            Psi::Regression(_) => plaus_to_f64(plausibility_at(train, &o.x, &o.y, cfg)?) > alpha,
        };
        Ok((covered, set.size()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let k = rows.len() as f64;
    Ok(CoverageReport {
        alpha,
        adjustment,
        n_test: rows.len(),
        empirical_coverage: rows.iter().filter(|r| r.0).count() as f64 / k,
        mean_size: rows.iter().map(|r| r.1).sum::<f64>() / k,
    })
}
