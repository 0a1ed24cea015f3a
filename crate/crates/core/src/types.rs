//! Domain vocabulary shared by every other module: response spaces,
//! observations, datasets, assertions and plausibility contours.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exact plausibility value. Raw and stretched contours carry `k/(n+1)`,
/// conditioned contours carry ratios of two such values.
pub type Plausibility = Ratio<u64>;

/// Converts a plausibility to the nearest `f64`. The division is correctly
/// rounded, so `3/5` maps to the same double as the literal `0.6`.
pub fn plaus_to_f64(p: Plausibility) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

/// The space a response lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ResponseSpace {
    /// A real interval; either end may be infinite.
    Continuous { lo: f64, hi: f64 },
    /// A finite, ordered label alphabet. Order is the tie-break order used
    /// everywhere in the crate.
    Labels(Vec<String>),
}

impl ResponseSpace {
    pub fn continuous(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidSpace(format!(
                "need lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(ResponseSpace::Continuous { lo, hi })
    }

    pub fn real_line() -> Self {
        ResponseSpace::Continuous {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let space = ResponseSpace::Labels(labels);
        space.check()?;
        Ok(space)
    }

    fn check(&self) -> Result<()> {
        match self {
            ResponseSpace::Continuous { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || lo >= hi {
                    return Err(Error::InvalidSpace(format!(
                        "need lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            ResponseSpace::Labels(labels) => {
                if labels.is_empty() {
                    return Err(Error::EmptyLabelAlphabet);
                }
                let mut seen = HashSet::new();
                for l in labels {
                    if !seen.insert(l.as_str()) {
                        return Err(Error::DuplicateLabel(l.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ResponseSpace::Labels(_))
    }

    /// Number of labels; zero for a continuous space.
    pub fn label_count(&self) -> usize {
        match self {
            ResponseSpace::Labels(l) => l.len(),
            ResponseSpace::Continuous { .. } => 0,
        }
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        match self {
            ResponseSpace::Labels(l) => l.iter().position(|s| s == name),
            ResponseSpace::Continuous { .. } => None,
        }
    }

    pub fn label_name(&self, idx: usize) -> Option<&str> {
        match self {
            ResponseSpace::Labels(l) => l.get(idx).map(String::as_str),
            ResponseSpace::Continuous { .. } => None,
        }
    }

    pub fn label_names(&self) -> &[String] {
        match self {
            ResponseSpace::Labels(l) => l,
            ResponseSpace::Continuous { .. } => &[],
        }
    }

    /// Whether a response belongs to this space.
    pub fn contains(&self, y: &Response) -> bool {
        match (self, y) {
            (ResponseSpace::Continuous { lo, hi }, Response::Real(v)) => {
                !v.is_nan() && *v >= *lo && *v <= *hi
            }
            (ResponseSpace::Labels(l), Response::Label(i)) => *i < l.len(),
            _ => false,
        }
    }
}

/// A response value, or a candidate value for the next response.
/// Labels are stored as indices into the owning [`ResponseSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Response {
    Real(f64),
    Label(usize),
}

impl Response {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Response::Real(v) => Some(*v),
            Response::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<usize> {
        match self {
            Response::Label(i) => Some(*i),
            Response::Real(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: Response,
}

impl Observation {
    pub fn new(x: Vec<f64>, y: Response) -> Self {
        Self { x, y }
    }
}

/// An in-memory batch of exchangeable observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub space: ResponseSpace,
    pub observations: Vec<Observation>,
}

impl Dataset {
    /// Builds a dataset without checking it; see [`validate_dataset`].
    pub fn new(space: ResponseSpace, observations: Vec<Observation>) -> Self {
        Self {
            space,
            observations,
        }
    }

    /// Builds a classification dataset from label names, checking every
    /// label against the alphabet.
    pub fn from_labelled<S: AsRef<str>>(
        space: ResponseSpace,
        rows: impl IntoIterator<Item = (Vec<f64>, S)>,
    ) -> Result<Self> {
        let mut observations = Vec::new();
        for (row, (x, label)) in rows.into_iter().enumerate() {
            let label = label.as_ref();
            let idx = space
                .label_index(label)
                .ok_or_else(|| Error::LabelOutsideSpace {
                    row,
                    label: label.to_string(),
                })?;
            observations.push(Observation::new(x, Response::Label(idx)));
        }
        validate_dataset(Dataset::new(space, observations))
    }

    /// Builds a regression dataset on the whole real line.
    pub fn from_real(rows: impl IntoIterator<Item = (Vec<f64>, f64)>) -> Result<Self> {
        let observations = rows
            .into_iter()
            .map(|(x, y)| Observation::new(x, Response::Real(y)))
            .collect();
        validate_dataset(Dataset::new(ResponseSpace::real_line(), observations))
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Feature dimension, `None` for an empty dataset.
    pub fn dim(&self) -> Option<usize> {
        self.observations.first().map(|o| o.x.len())
    }

    /// The sample with `(x, y)` appended as row `n+1`.
    pub fn augmented(&self, x: &[f64], y: Response) -> Dataset {
        let mut observations = Vec::with_capacity(self.len() + 1);
        observations.extend(self.observations.iter().cloned());
        observations.push(Observation::new(x.to_vec(), y));
        Dataset::new(self.space.clone(), observations)
    }

    /// Labels in order of first appearance, as names.
    pub fn labels_in_order(&self) -> Vec<String> {
        let mut seen = Vec::<usize>::new();
        for o in &self.observations {
            if let Response::Label(i) = o.y {
                if !seen.contains(&i) {
                    seen.push(i);
                }
            }
        }
        seen.iter()
            .filter_map(|&i| self.space.label_name(i).map(str::to_string))
            .collect()
    }

    /// Subset of rows by index, in the order given.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset::new(
            self.space.clone(),
            rows.iter().map(|&i| self.observations[i].clone()).collect(),
        )
    }
}

/// Checks the dataset invariants and hands the dataset back unchanged.
pub fn validate_dataset(d: Dataset) -> Result<Dataset> {
    d.space.check()?;
    let dim = d.dim();
    for (row, o) in d.observations.iter().enumerate() {
        if let Some(expected) = dim {
            if o.x.len() != expected || expected == 0 {
                return Err(Error::DimensionMismatch {
                    row,
                    expected: expected.max(1),
                    found: o.x.len(),
                });
            }
        }
        if o.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadCsv(format!(
                "observation {row}: non-finite feature"
            )));
        }
        match (&d.space, &o.y) {
            (ResponseSpace::Labels(labels), Response::Label(i)) => {
                if *i >= labels.len() {
                    return Err(Error::LabelOutsideSpace {
                        row,
                        label: format!("#{i}"),
                    });
                }
            }
            (ResponseSpace::Continuous { .. }, Response::Real(v)) => {
                if !d.space.contains(&o.y) {
                    return Err(Error::SpaceMismatch(format!(
                        "observation {row}: response {v} outside the declared interval"
                    )));
                }
            }
            _ => {
                return Err(Error::SpaceMismatch(format!(
                    "observation {row}: response kind differs from the space"
                )))
            }
        }
    }
    Ok(d)
}

/// A real interval with open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lo_open {
            y > self.lo
        } else {
            y >= self.lo
        };
        let below = if self.hi_open {
            y < self.hi
        } else {
            y <= self.hi
        };
        above && below
    }
}

/// A statement "the next response lies in A".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Assertion {
    Labels(BTreeSet<usize>),
    Intervals(Vec<Interval>),
}

impl Assertion {
    pub fn labels(idx: impl IntoIterator<Item = usize>) -> Self {
        Assertion::Labels(idx.into_iter().collect())
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Assertion::Intervals(vec![Interval::closed(lo, hi)])
    }

    pub fn contains(&self, y: &Response) -> bool {
        match (self, y) {
            (Assertion::Labels(s), Response::Label(i)) => s.contains(i),
            (Assertion::Intervals(iv), Response::Real(v)) => iv.iter().any(|i| i.contains(*v)),
            _ => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Assertion::Labels(s) => s.is_empty(),
            Assertion::Intervals(iv) => iv.iter().all(Interval::is_empty),
        }
    }

    /// Checks the assertion against a response space: labels must exist,
    /// intervals must be pairwise disjoint.
    pub fn validate(&self, space: &ResponseSpace) -> Result<()> {
        match (self, space) {
            (Assertion::Labels(s), ResponseSpace::Labels(l)) => {
                if let Some(bad) = s.iter().find(|&&i| i >= l.len()) {
                    return Err(Error::InvalidArgument(format!(
                        "assertion label #{bad} outside the space"
                    )));
                }
                Ok(())
            }
            (Assertion::Intervals(iv), ResponseSpace::Continuous { .. }) => {
                let mut live: Vec<&Interval> = iv.iter().filter(|i| !i.is_empty()).collect();
                live.sort_by(|a, b| a.lo.total_cmp(&b.lo));
                for w in live.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let touch = a.hi > b.lo || (a.hi == b.lo && !a.hi_open && !b.lo_open);
                    if touch {
                        return Err(Error::InvalidArgument(
                            "assertion intervals overlap".to_string(),
                        ));
                    }
                }
                Ok(())
            }
            _ => Err(Error::SpaceMismatch(
                "assertion kind differs from the response space".to_string(),
            )),
        }
    }

    /// Whether the assertion meets the continuous space `[lo, hi]`.
    pub(crate) fn meets_interval(&self, lo: f64, hi: f64) -> bool {
        match self {
            Assertion::Intervals(iv) => iv.iter().any(|i| {
                let (a, a_open) = if i.lo >= lo {
                    (i.lo, i.lo_open)
                } else {
                    (lo, false)
                };
                let (b, b_open) = if i.hi <= hi {
                    (i.hi, i.hi_open)
                } else {
                    (hi, false)
                };
                !Interval {
                    lo: a,
                    hi: b,
                    lo_open: a_open,
                    hi_open: b_open,
                }
                .is_empty()
            }),
            Assertion::Labels(_) => false,
        }
    }

    /// Whether the assertion covers the whole continuous space `[lo, hi]`.
    pub(crate) fn covers_interval(&self, lo: f64, hi: f64) -> bool {
        let Assertion::Intervals(iv) = self else {
            return false;
        };
        let mut live: Vec<&Interval> = iv.iter().filter(|i| !i.is_empty()).collect();
        live.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        // Sweep from lo, tracking the right end of the covered prefix.
        let mut reach = lo;
        let mut reach_closed = false;
        let mut started = false;
        for i in live {
            let starts_ok = if !started {
                i.lo < lo || (i.lo == lo && (!i.lo_open || lo == f64::NEG_INFINITY))
            } else {
                i.lo < reach || (i.lo == reach && (reach_closed || !i.lo_open))
            };
            if !starts_ok {
                if started {
                    break;
                }
                return false;
            }
            started = true;
            if i.hi > reach || (i.hi == reach && !i.hi_open) {
                reach = i.hi;
                reach_closed = !i.hi_open;
            }
        }
        started && (reach > hi || (reach == hi && (reach_closed || hi == f64::INFINITY)))
    }
}

/// Which empty-set adjustment, if any, produced a contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Adjustment {
    Raw,
    Conditioned,
    Stretched,
}

impl Adjustment {
    pub fn as_str(self) -> &'static str {
        match self {
            Adjustment::Raw => "raw",
            Adjustment::Conditioned => "conditioned",
            Adjustment::Stretched => "stretched",
        }
    }
}

impl fmt::Display for Adjustment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A plausibility contour evaluated at a list of candidate responses:
/// every label for a finite space, grid points for a continuous one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourTable {
    pub points: Vec<(Response, Plausibility)>,
    /// Training sample size the contour was computed from.
    pub n: usize,
    pub adjusted: Adjustment,
}

impl ContourTable {
    pub fn max(&self) -> Option<Plausibility> {
        self.points.iter().map(|(_, p)| *p).max()
    }

    /// Index of the first point attaining the maximum.
    pub fn argmax(&self) -> Option<usize> {
        let max = self.max()?;
        self.points.iter().position(|(_, p)| *p == max)
    }

    /// Plausibility of a label, if present.
    pub fn label_value(&self, label: usize) -> Option<Plausibility> {
        self.points
            .iter()
            .find(|(r, _)| *r == Response::Label(label))
            .map(|(_, p)| *p)
    }

    pub fn values(&self) -> Vec<Plausibility> {
        self.points.iter().map(|(_, p)| *p).collect()
    }

    /// Checks the range invariants: raw and stretched values are
    /// `k/(n+1)` with `1 <= k <= n+1`, adjusted contours peak at exactly 1.
    pub fn is_well_formed(&self) -> bool {
        let m = self.n as u64 + 1;
        let one = Plausibility::from_integer(1);
        let in_range = self
            .points
            .iter()
            .all(|(_, p)| *p > Plausibility::from_integer(0) && *p <= one);
        if !in_range {
            return false;
        }
        let lattice = self.points.iter().all(|(_, p)| (*p * m).is_integer());
        match self.adjusted {
            Adjustment::Raw => lattice,
            Adjustment::Stretched => lattice && self.max() == Some(one),
            Adjustment::Conditioned => self.max() == Some(one),
        }
    }
}

/// A consonant predictor: upper probabilities are suprema of the contour.
/// Queries live in [`crate::possibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossibilityPredictor {
    pub contour: ContourTable,
    pub space: ResponseSpace,
    /// Total ignorance: contour identically 1 over the whole space.
    pub vacuous: bool,
}

impl PossibilityPredictor {
    pub fn new(contour: ContourTable, space: ResponseSpace) -> Self {
        Self {
            contour,
            space,
            vacuous: false,
        }
    }
}

/// The predictor expressing no information about the next response.
pub fn vacuous_predictor(space: ResponseSpace) -> PossibilityPredictor {
    let one = Plausibility::from_integer(1);
    let points = (0..space.label_count())
        .map(|i| (Response::Label(i), one))
        .collect();
    PossibilityPredictor {
        contour: ContourTable {
            points,
            n: 0,
            adjusted: Adjustment::Raw,
        },
        space,
        vacuous: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ifo() -> ResponseSpace {
        ResponseSpace::labels(["I", "F", "O"]).unwrap()
    }

    #[test]
    fn accepts_well_formed_dataset() {
        let d = Dataset::from_labelled(
            ifo(),
            vec![(vec![1.0], "I"), (vec![2.0], "F"), (vec![3.0], "O")],
        )
        .unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), Some(1));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let d = Dataset::new(
            ifo(),
            vec![
                Observation::new(vec![1.0], Response::Label(0)),
                Observation::new(vec![1.0, 2.0], Response::Label(1)),
            ],
        );
        assert_eq!(
            validate_dataset(d),
            Err(Error::DimensionMismatch {
                row: 1,
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn rejects_unknown_label() {
        let err = Dataset::from_labelled(ifo(), vec![(vec![1.0], "Z")]).unwrap_err();
        assert!(matches!(err, Error::LabelOutsideSpace { label, .. } if label == "Z"));
        let d = Dataset::new(ifo(), vec![Observation::new(vec![1.0], Response::Label(3))]);
        assert!(matches!(
            validate_dataset(d),
            Err(Error::LabelOutsideSpace { .. })
        ));
    }

    #[test]
    fn rejects_empty_or_duplicate_alphabet() {
        assert_eq!(
            ResponseSpace::labels(Vec::<String>::new()),
            Err(Error::EmptyLabelAlphabet)
        );
        assert!(matches!(
            ResponseSpace::labels(["a", "b", "a"]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(ResponseSpace::continuous(1.0, 1.0).is_err());
    }

    #[test]
    fn validation_is_idempotent() {
        let d = Dataset::from_real(vec![(vec![0.0], 1.0), (vec![1.0], 2.0)]).unwrap();
        let once = validate_dataset(d.clone()).unwrap();
        let twice = validate_dataset(once.clone()).unwrap();
        assert_eq!(once, d);
        assert_eq!(once, twice);
    }

    #[test]
    fn vacuous_contour_is_one_everywhere() {
        let p = vacuous_predictor(ifo());
        assert!(p.vacuous);
        for i in 0..3 {
            assert_eq!(
                p.contour.label_value(i),
                Some(Plausibility::from_integer(1))
            );
        }
    }

    #[test]
    fn interval_cover_and_meet() {
        let a = Assertion::Intervals(vec![Interval::closed(0.0, 1.0), Interval::open(1.0, 2.0)]);
        assert!(a.covers_interval(0.0, 1.5));
        assert!(!a.covers_interval(0.0, 2.0));
        assert!(a.meets_interval(1.9, 5.0));
        assert!(!a.meets_interval(2.0, 5.0));
        let gap =
            Assertion::Intervals(vec![Interval::closed(0.0, 1.0), Interval::closed(1.5, 2.0)]);
        assert!(!gap.covers_interval(0.0, 2.0));
        let whole = Assertion::Intervals(vec![Interval::closed(f64::NEG_INFINITY, f64::INFINITY)]);
        assert!(whole.covers_interval(f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let a = Assertion::Intervals(vec![Interval::closed(0.0, 1.0), Interval::closed(1.0, 2.0)]);
        assert!(a.validate(&ResponseSpace::real_line()).is_err());
        let b = Assertion::Intervals(vec![Interval::closed(0.0, 1.0), Interval::open(1.0, 2.0)]);
        assert!(b.validate(&ResponseSpace::real_line()).is_ok());
    }
}
