//! Consonant predictors built from contours, and the random-set view of
//! classification output.
//!
//! For a finite label space the transducer induces a random set: with
//! `U'` uniform on `{1, ..., n+1}`, the realised set is every label whose
//! rank is at most `U'`. When `U'` falls below the smallest possible rank
//! the set is empty. Two adjustments remove that empty mass:
//!
//! * conditioning discards it and renormalises, which divides the contour
//!   by its maximum;
//! * stretching widens each empty draw just enough to reach the smallest
//!   possible rank, which moves the empty mass onto the smallest non-empty
//!   focal set and lifts the contour at the argmax label to 1.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transducer::{self, TransducerConfig};
use crate::types::{
    vacuous_predictor, Adjustment, Assertion, ContourTable, Dataset, Plausibility,
    PossibilityPredictor, Response, ResponseSpace,
};

fn zero() -> Plausibility {
    Plausibility::from_integer(0)
}

fn one() -> Plausibility {
    Plausibility::from_integer(1)
}

/// Distribution of the data-dependent random set of labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSetDistribution {
    /// Non-empty focal sets, nested and listed from smallest to largest.
    pub focal: Vec<(BTreeSet<usize>, Plausibility)>,
    pub empty_mass: Plausibility,
    pub n: usize,
    pub label_count: usize,
    pub adjusted: Adjustment,
}

impl RandomSetDistribution {
    pub fn includes_empty(&self) -> bool {
        self.empty_mass > zero()
    }

    pub fn total_mass(&self) -> Plausibility {
        self.focal
            .iter()
            .fold(self.empty_mass, |acc, (_, m)| acc + *m)
    }

    /// Mass of one focal set, zero if absent.
    pub fn mass_of(&self, set: &BTreeSet<usize>) -> Plausibility {
        if set.is_empty() {
            return self.empty_mass;
        }
        self.focal
            .iter()
            .find(|(s, _)| s == set)
            .map(|(_, m)| *m)
            .unwrap_or_else(zero)
    }
}

/// Aggregates `u = 1..=n+1` into focal sets given each label's rank.
pub fn random_set_from_ranks(
    by_label: &[(usize, u64)],
    n: usize,
    label_count: usize,
) -> RandomSetDistribution {
    let m = n as u64 + 1;
    let mut distinct: Vec<u64> = by_label.iter().map(|&(_, r)| r).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let first = distinct.first().copied().unwrap_or(m + 1);
    let empty_mass = Plausibility::new(first - 1, m);
    let focal = distinct
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let next = distinct.get(j + 1).copied().unwrap_or(m + 1);
            let set: BTreeSet<usize> = by_label
                .iter()
                .filter(|&&(_, rl)| rl <= r)
                .map(|&(l, _)| l)
                .collect();
            (set, Plausibility::new(next - r, m))
        })
        .collect();
    RandomSetDistribution {
        focal,
        empty_mass,
        n,
        label_count,
        adjusted: Adjustment::Raw,
    }
}

/// The random set at a query point.
pub fn random_set(train: &Dataset, x: &[f64]) -> Result<RandomSetDistribution> {
    let ranks = transducer::possible_ranks(train, x)?;
    Ok(random_set_from_ranks(
        &ranks.by_label,
        ranks.n,
        train.space.label_count(),
    ))
}

/// Moves the empty-set mass onto the smallest non-empty focal set.
pub fn stretched_random_set(rs: &RandomSetDistribution) -> Result<RandomSetDistribution> {
    let mut out = rs.clone();
    let smallest = out.focal.first_mut().ok_or(Error::NoNonemptyFocalSet)?;
    smallest.1 += rs.empty_mass;
    out.empty_mass = zero();
    out.adjusted = Adjustment::Stretched;
    Ok(out)
}

/// `pi(y)` = total mass of focal sets containing `y`.
pub fn contour_from_random_set(rs: &RandomSetDistribution) -> ContourTable {
    let points = (0..rs.label_count)
        .map(|l| {
            let mass = rs
                .focal
                .iter()
                .filter(|(s, _)| s.contains(&l))
                .fold(zero(), |acc, (_, m)| acc + *m);
            (Response::Label(l), mass)
        })
        .collect();
    ContourTable {
        points,
        n: rs.n,
        adjusted: rs.adjusted,
    }
}

fn require_raw(c: &ContourTable) -> Result<()> {
    match c.adjusted {
        Adjustment::Raw => Ok(()),
        other => Err(Error::AlreadyAdjusted(other.as_str())),
    }
}

/// Divides the contour by its maximum.
pub fn adjust_conditioning(raw: &ContourTable) -> Result<ContourTable> {
    require_raw(raw)?;
    let max = raw
        .max()
        .filter(|m| *m > zero())
        .ok_or(Error::InvalidArgument(
            "cannot condition an all-zero contour".into(),
        ))?;
    Ok(ContourTable {
        points: raw.points.iter().map(|(r, p)| (*r, *p / max)).collect(),
        n: raw.n,
        adjusted: Adjustment::Conditioned,
    })
}

/// Sets the value at the first argmax to 1 and leaves the rest alone.
pub fn adjust_stretching(raw: &ContourTable) -> Result<ContourTable> {
    require_raw(raw)?;
    let mut points = raw.points.clone();
    if let Some(i) = raw.argmax() {
        points[i].1 = one();
    }
    Ok(ContourTable {
        points,
        n: raw.n,
        adjusted: Adjustment::Stretched,
    })
}

/// Applies an adjustment to a raw contour. `Raw` is the identity.
pub fn adjust(raw: &ContourTable, adjustment: Adjustment) -> Result<ContourTable> {
    match adjustment {
        Adjustment::Raw => Ok(raw.clone()),
        Adjustment::Conditioned => adjust_conditioning(raw),
        Adjustment::Stretched => adjust_stretching(raw),
    }
}

/// Builds the predictor at `x`. Regression contours are never adjusted since
/// they already reach 1 on the grid. An empty training set gives the vacuous
/// predictor.
pub fn build_predictor(
    train: &Dataset,
    x: &[f64],
    cfg: &TransducerConfig,
    adjustment: Adjustment,
) -> Result<PossibilityPredictor> {
    if train.is_empty() {
        return Ok(vacuous_predictor(train.space.clone()));
    }
    let raw = transducer::contour(train, x, cfg)?;
    let contour = if train.space.is_finite() {
        adjust(&raw, adjustment)?
    } else {
        raw
    };
    Ok(PossibilityPredictor::new(contour, train.space.clone()))
}

impl PossibilityPredictor {
    /// Upper probability: largest contour value over the assertion.
    pub fn upper(&self, a: &Assertion) -> Plausibility {
        if self.vacuous {
            let meets = match (&self.space, a) {
                (ResponseSpace::Continuous { lo, hi }, _) => a.meets_interval(*lo, *hi),
                (ResponseSpace::Labels(_), _) => !a.is_empty(),
            };
            return if meets { one() } else { zero() };
        }
        self.contour
            .points
            .iter()
            .filter(|(r, _)| a.contains(r))
            .map(|(_, p)| *p)
            .max()
            .unwrap_or_else(zero)
    }

    /// Lower probability, `1 - upper(complement)`.
    pub fn lower(&self, a: &Assertion) -> Plausibility {
        if self.vacuous {
            let covers = match (&self.space, a) {
                (ResponseSpace::Continuous { lo, hi }, _) => a.covers_interval(*lo, *hi),
                (ResponseSpace::Labels(l), Assertion::Labels(s)) => {
                    (0..l.len()).all(|i| s.contains(&i))
                }
                _ => false,
            };
            return if covers { one() } else { zero() };
        }
        let upper_complement = self
            .contour
            .points
            .iter()
            .filter(|(r, _)| !a.contains(r))
            .map(|(_, p)| *p)
            .max()
            .unwrap_or_else(zero);
        one() - upper_complement
    }
}

pub fn upper_prob(p: &PossibilityPredictor, a: &Assertion) -> Plausibility {
    p.upper(a)
}

pub fn lower_prob(p: &PossibilityPredictor, a: &Assertion) -> Plausibility {
    p.lower(a)
}
