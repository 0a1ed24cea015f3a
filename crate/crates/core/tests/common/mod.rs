//! Shared test support: random small instances, brute-force oracles written
//! from the definitions, and invariant checkers used by both the property
//! suite and the acceptance runner.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use possic::nonconformity::PointPredictor;
use possic::possibility::{build_predictor, random_set, stretched_random_set};
use possic::predsets::{prediction_set, SetKind};
use possic::transducer::{
    contour, contour_classification, plausibility_at, possible_ranks, TransducerConfig,
};
use possic::types::{
    Adjustment, Assertion, Dataset, Observation, Plausibility, Response, ResponseSpace,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A training set and a query point.
#[derive(Debug, Clone)]
pub struct Instance {
    pub train: Dataset,
    pub x: Vec<f64>,
}

fn feature(r: &mut ChaCha8Rng, gridded: bool) -> f64 {
    if gridded {
        r.random_range(0..3) as f64
    } else {
        r.random_range(-1.0..1.0)
    }
}

/// Small classification instance: `1..=max_n` rows, `1..=max_labels`
/// labels, one or two features. Half the instances use integer features
/// so distances tie.
pub fn classification_instance(seed: u64, max_n: usize, max_labels: usize) -> Instance {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_n);
    let k = r.random_range(1..=max_labels);
    let dim = r.random_range(1..=2);
    let gridded = r.random_bool(0.5);
    let names: Vec<String> = (0..k)
        .map(|i| ((b'a' + i as u8) as char).to_string())
        .collect();
    let space = ResponseSpace::labels(names).unwrap();
    let obs = (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| feature(&mut r, gridded)).collect();
            Observation::new(x, Response::Label(r.random_range(0..k)))
        })
        .collect();
    let x = (0..dim).map(|_| feature(&mut r, gridded)).collect();
    Instance {
        train: Dataset::new(space, obs),
        x,
    }
}

/// Small regression instance with continuous responses, plus a knn-mean
/// predictor whose `k` fits the leave-one-out sample size.
pub fn regression_instance(seed: u64, max_n: usize) -> (Instance, PointPredictor, f64) {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_n);
    let dim = r.random_range(1..=2);
    let gridded = r.random_bool(0.5);
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|_| {
            (
                (0..dim).map(|_| feature(&mut r, gridded)).collect(),
                r.random_range(-2.0..2.0),
            )
        })
        .collect();
    let x = (0..dim).map(|_| feature(&mut r, gridded)).collect();
    let k = r.random_range(1..=n);
    let y = r.random_range(-3.0..3.0);
    (
        Instance {
            train: Dataset::from_real(rows).unwrap(),
            x,
        },
        PointPredictor::KnnMean { k },
        y,
    )
}

pub fn random_labels(r: &mut ChaCha8Rng, k: usize) -> Assertion {
    Assertion::labels((0..k).filter(|_| r.random_bool(0.5)))
}

pub fn shuffled(d: &Dataset, r: &mut ChaCha8Rng) -> Dataset {
    let mut obs = d.observations.clone();
    obs.shuffle(r);
    Dataset::new(d.space.clone(), obs)
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Nearest-neighbour ratio of row `i` against the bag of the other rows.
/// Each convention gets its own branch.
#[allow(clippy::if_same_then_else)]
fn oracle_nn_score(rows: &[(Vec<f64>, usize)], i: usize) -> f64 {
    let bag: Vec<&(Vec<f64>, usize)> = rows
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, r)| r)
        .collect();
    let (xi, li) = &rows[i];
    let mut same = f64::INFINITY;
    let mut diff = f64::INFINITY;
    for (xj, lj) in bag {
        let d = dist(xi, xj);
        if lj == li {
            same = same.min(d);
        } else {
            diff = diff.min(d);
        }
    }
    if same == 0.0 && diff == 0.0 {
        0.0
    } else if same == f64::INFINITY && diff == f64::INFINITY {
        0.0
    } else if diff == 0.0 {
        f64::INFINITY
    } else if same == f64::INFINITY {
        f64::INFINITY
    } else {
        same / diff
    }
}

/// `#{i : T_i >= T_{n+1}}` after appending `(x, label)`.
fn oracle_nn_count(inst: &Instance, label: usize) -> u64 {
    let mut rows: Vec<(Vec<f64>, usize)> = inst
        .train
        .observations
        .iter()
        .map(|o| (o.x.clone(), o.y.as_label().unwrap()))
        .collect();
    rows.push((inst.x.clone(), label));
    let scores: Vec<f64> = (0..rows.len()).map(|i| oracle_nn_score(&rows, i)).collect();
    let last = scores[rows.len() - 1];
    scores.iter().filter(|&&t| t >= last).count() as u64
}

/// Absolute residual of row `i` against a knn-mean fit on the other rows;
/// the neighbours' responses are summed in ascending order.
fn oracle_knn_score(rows: &[(Vec<f64>, f64)], i: usize, k: usize) -> f64 {
    let bag: Vec<&(Vec<f64>, f64)> = rows
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, r)| r)
        .collect();
    let mut ds: Vec<f64> = bag.iter().map(|(xj, _)| dist(&rows[i].0, xj)).collect();
    ds.sort_by(f64::total_cmp);
    let cutoff = ds[k - 1];
    let mut ys: Vec<f64> = bag
        .iter()
        .filter(|(xj, _)| dist(&rows[i].0, xj) <= cutoff)
        .map(|(_, y)| *y)
        .collect();
    ys.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    for y in &ys {
        sum += y;
    }
    (rows[i].1 - sum / ys.len() as f64).abs()
}

pub fn oracle_regression_plausibility(inst: &Instance, k: usize, y: f64) -> Plausibility {
    let mut rows: Vec<(Vec<f64>, f64)> = inst
        .train
        .observations
        .iter()
        .map(|o| (o.x.clone(), o.y.as_real().unwrap()))
        .collect();
    rows.push((inst.x.clone(), y));
    let scores: Vec<f64> = (0..rows.len())
        .map(|i| oracle_knn_score(&rows, i, k))
        .collect();
    let last = scores[rows.len() - 1];
    let count = scores.iter().filter(|&&t| t >= last).count() as u64;
    Ratio::new(count, rows.len() as u64)
}

/// Enumerates `U' = 1..=n+1`; each draw yields the set of labels whose
/// rank is at most `U'`. Returns the draw-indexed sets.
fn oracle_draws(inst: &Instance) -> Vec<BTreeSet<usize>> {
    let n = inst.train.len() as u64;
    let k = inst.train.space.label_count();
    let ranks: Vec<u64> = (0..k).map(|l| n + 2 - oracle_nn_count(inst, l)).collect();
    (1..=n + 1)
        .map(|u| (0..k).filter(|&l| ranks[l] <= u).collect())
        .collect()
}

pub struct OracleClassification {
    pub raw: Vec<Plausibility>,
    pub ranks: Vec<u64>,
    pub masses: BTreeMap<BTreeSet<usize>, Plausibility>,
    pub stretched_masses: BTreeMap<BTreeSet<usize>, Plausibility>,
    pub conditioned: Vec<Plausibility>,
    /// Contour of the stretched random set (raises every tied argmax).
    pub stretched_set_contour: Vec<Plausibility>,
}

pub fn oracle_classification(inst: &Instance) -> OracleClassification {
    let n = inst.train.len() as u64;
    let m = n + 1;
    let k = inst.train.space.label_count();
    let counts: Vec<u64> = (0..k).map(|l| oracle_nn_count(inst, l)).collect();
    let draws = oracle_draws(inst);
    let mut masses = BTreeMap::new();
    for s in &draws {
        *masses.entry(s.clone()).or_insert(Ratio::from_integer(0)) += Ratio::new(1, m);
    }
    let smallest = draws.iter().find(|s| !s.is_empty()).cloned().unwrap();
    let stretched_draws: Vec<BTreeSet<usize>> = draws
        .iter()
        .map(|s| {
            if s.is_empty() {
                smallest.clone()
            } else {
                s.clone()
            }
        })
        .collect();
    let mut stretched_masses = BTreeMap::new();
    for s in &stretched_draws {
        *stretched_masses
            .entry(s.clone())
            .or_insert(Ratio::from_integer(0)) += Ratio::new(1, m);
    }
    let nonempty = draws.iter().filter(|s| !s.is_empty()).count() as u64;
    let conditioned = (0..k)
        .map(|l| {
            Ratio::new(
                draws.iter().filter(|s| s.contains(&l)).count() as u64,
                nonempty,
            )
        })
        .collect();
    let stretched_set_contour = (0..k)
        .map(|l| {
            Ratio::new(
                stretched_draws.iter().filter(|s| s.contains(&l)).count() as u64,
                m,
            )
        })
        .collect();
    OracleClassification {
        raw: counts.iter().map(|&c| Ratio::new(c, m)).collect(),
        ranks: counts.iter().map(|&c| n + 2 - c).collect(),
        masses,
        stretched_masses,
        conditioned,
        stretched_set_contour,
    }
}

fn vals(p: &possic::types::ContourTable) -> Vec<Plausibility> {
    p.values()
}

/// Library output against the oracle for one classification instance.
pub fn check_classification_oracle(inst: &Instance) -> Check {
    let o = oracle_classification(inst);
    let cfg = TransducerConfig::classification();
    let k = inst.train.space.label_count();
    for l in 0..k {
        let p = plausibility_at(&inst.train, &inst.x, &Response::Label(l), &cfg)
            .map_err(|e| e.to_string())?;
        if p != o.raw[l] {
            return Err(format!(
                "plausibility_at label {l}: {p} vs oracle {}",
                o.raw[l]
            ));
        }
    }
    let ranks = possible_ranks(&inst.train, &inst.x).map_err(|e| e.to_string())?;
    let lib_ranks: Vec<u64> = ranks.by_label.iter().map(|&(_, r)| r).collect();
    if lib_ranks != o.ranks {
        return Err(format!("ranks {lib_ranks:?} vs oracle {:?}", o.ranks));
    }
    let rs = random_set(&inst.train, &inst.x).map_err(|e| e.to_string())?;
    let compare = |lib: &possic::possibility::RandomSetDistribution,
                   want: &BTreeMap<BTreeSet<usize>, Plausibility>,
                   what: &str|
     -> Check {
        let mut got: BTreeMap<BTreeSet<usize>, Plausibility> =
            lib.focal.iter().map(|(s, m)| (s.clone(), *m)).collect();
        if lib.empty_mass != Ratio::from_integer(0) {
            got.insert(BTreeSet::new(), lib.empty_mass);
        }
        if &got != want {
            return Err(format!("{what} masses {got:?} vs oracle {want:?}"));
        }
        Ok(())
    };
    compare(&rs, &o.masses, "raw")?;
    let srs = stretched_random_set(&rs).map_err(|e| e.to_string())?;
    compare(&srs, &o.stretched_masses, "stretched")?;

    let cond = build_predictor(&inst.train, &inst.x, &cfg, Adjustment::Conditioned)
        .map_err(|e| e.to_string())?;
    if vals(&cond.contour) != o.conditioned {
        return Err(format!(
            "conditioned {:?} vs oracle {:?}",
            vals(&cond.contour),
            o.conditioned
        ));
    }
    let st = build_predictor(&inst.train, &inst.x, &cfg, Adjustment::Stretched)
        .map_err(|e| e.to_string())?;
    let st_vals = vals(&st.contour);
    let max = *o.raw.iter().max().unwrap();
    let tied = o.raw.iter().filter(|&&v| v == max).count();
    if tied == 1 {
        if st_vals != o.stretched_set_contour {
            return Err(format!(
                "stretched {st_vals:?} vs oracle {:?}",
                o.stretched_set_contour
            ));
        }
    } else {
        // Tied maximum: only the first maximiser is raised.
        let first = o.raw.iter().position(|&v| v == max).unwrap();
        let want: Vec<Plausibility> = o
            .raw
            .iter()
            .enumerate()
            .map(|(l, &v)| {
                if l == first {
                    Ratio::from_integer(1)
                } else {
                    v
                }
            })
            .collect();
        if st_vals != want {
            return Err(format!("tied stretched {st_vals:?} vs {want:?}"));
        }
    }
    Ok(())
}

pub fn check_regression_oracle(seed: u64) -> Check {
    let (inst, predictor, y) = regression_instance(seed, 6);
    let PointPredictor::KnnMean { k } = predictor else {
        unreachable!()
    };
    let cfg = TransducerConfig::regression(predictor);
    let ys: Vec<f64> = std::iter::once(y)
        .chain(inst.train.observations.iter().filter_map(|o| o.y.as_real()))
        .collect();
    for y in ys {
        let got = plausibility_at(&inst.train, &inst.x, &Response::Real(y), &cfg)
            .map_err(|e| e.to_string())?;
        let want = oracle_regression_plausibility(&inst, k, y);
        if got != want {
            return Err(format!(
                "regression plausibility at {y}: {got} vs oracle {want}"
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Property checkers
// ---------------------------------------------------------------------------

const ADJ: [Adjustment; 3] = [
    Adjustment::Raw,
    Adjustment::Conditioned,
    Adjustment::Stretched,
];

fn predictors(
    inst: &Instance,
) -> Result<Vec<(Adjustment, possic::types::PossibilityPredictor)>, String> {
    let cfg = TransducerConfig::classification();
    ADJ.iter()
        .map(|&a| {
            build_predictor(&inst.train, &inst.x, &cfg, a)
                .map(|p| (a, p))
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn complement(a: &Assertion, k: usize) -> Assertion {
    match a {
        Assertion::Labels(s) => Assertion::labels((0..k).filter(|l| !s.contains(l))),
        Assertion::Intervals(_) => unreachable!(),
    }
}

/// `lower(A) = 1 - upper(A^c)`, `lower <= upper` once normalised, and for the adjusted
/// predictors the lower probability equals the total mass of focal sets
/// inside `A` by subset enumeration.
pub fn check_duality(seed: u64) -> Check {
    let inst = classification_instance(seed, 8, 3);
    let k = inst.train.space.label_count();
    let mut r = rng(seed ^ 0xD0A1);
    let a = random_labels(&mut r, k);
    let ac = complement(&a, k);
    let one = Ratio::from_integer(1);
    let o = oracle_classification(&inst);
    for (adj, p) in predictors(&inst)? {
        let (lo, up) = (p.lower(&a), p.upper(&a));
        if lo != one - p.upper(&ac) {
            return Err(format!("{adj}: lower {lo} != 1 - upper(A^c)"));
        }
        // Raw contours peak below 1, so only adjusted ones are coherent.
        if adj != Adjustment::Raw && lo > up {
            return Err(format!("{adj}: lower {lo} > upper {up}"));
        }
        let inside = |masses: &BTreeMap<BTreeSet<usize>, Plausibility>| -> Plausibility {
            let Assertion::Labels(set) = &a else {
                unreachable!()
            };
            masses
                .iter()
                .filter(|(s, _)| !s.is_empty() && s.is_subset(set))
                .fold(Ratio::from_integer(0), |acc, (_, m)| acc + *m)
        };
        let empty = o
            .masses
            .get(&BTreeSet::new())
            .copied()
            .unwrap_or(Ratio::from_integer(0));
        let unique = o
            .raw
            .iter()
            .filter(|&&v| v == *o.raw.iter().max().unwrap())
            .count()
            == 1;
        let want = match adj {
            Adjustment::Conditioned => Some(inside(&o.masses) / (one - empty)),
            Adjustment::Stretched if unique => Some(inside(&o.stretched_masses)),
            _ => None,
        };
        if let Some(w) = want {
            if lo != w {
                return Err(format!("{adj}: lower {lo} vs focal-set sum {w}"));
            }
        }
    }
    Ok(())
}

/// `upper(A u B) = max(upper(A), upper(B))`.
pub fn check_maxitivity(seed: u64) -> Check {
    let inst = classification_instance(seed, 8, 3);
    let k = inst.train.space.label_count();
    let mut r = rng(seed ^ 0x3A11);
    let (a, b) = (random_labels(&mut r, k), random_labels(&mut r, k));
    let union = match (&a, &b) {
        (Assertion::Labels(x), Assertion::Labels(y)) => Assertion::Labels(x | y),
        _ => unreachable!(),
    };
    for (adj, p) in predictors(&inst)? {
        let lhs = p.upper(&union);
        let rhs = p.upper(&a).max(p.upper(&b));
        if lhs != rhs {
            return Err(format!("{adj}: upper(A u B) {lhs} != {rhs}"));
        }
    }
    Ok(())
}

fn labels_of(s: &possic::predsets::PredictionSet) -> BTreeSet<usize> {
    match &s.kind {
        SetKind::Labels(l) => l.iter().copied().collect(),
        SetKind::Intervals(_) => unreachable!(),
    }
}

/// `alpha_1 <= alpha_2` implies the `alpha_2` set sits inside the
/// `alpha_1` set, for label sets and for regression interval unions.
pub fn check_alpha_nesting(seed: u64) -> Check {
    let mut r = rng(seed ^ 0xA1FA);
    let mut a1: f64 = r.random_range(0.0..1.0);
    let mut a2: f64 = r.random_range(0.0..1.0);
    if a1 > a2 {
        std::mem::swap(&mut a1, &mut a2);
    }
    let inst = classification_instance(seed, 8, 3);
    for (adj, p) in predictors(&inst)? {
        let s1 = labels_of(&prediction_set(&p, a1).unwrap());
        let s2 = labels_of(&prediction_set(&p, a2).unwrap());
        if !s2.is_subset(&s1) {
            return Err(format!("{adj}: set at {a2} not inside set at {a1}"));
        }
    }
    let (inst, predictor, _) = regression_instance(seed, 8);
    let p = build_predictor(
        &inst.train,
        &inst.x,
        &TransducerConfig::regression(predictor),
        Adjustment::Raw,
    )
    .map_err(|e| e.to_string())?;
    let s1 = prediction_set(&p, a1).unwrap();
    let s2 = prediction_set(&p, a2).unwrap();
    for (y, _) in &p.contour.points {
        if s2.contains(y) && !s1.contains(y) {
            return Err(format!("regression: {y:?} in set at {a2} but not at {a1}"));
        }
    }
    Ok(())
}

/// Stretched contour below the conditioned one, with equality at the
/// argmax, and stretched sets inside conditioned sets.
pub fn check_stretch_below_condition(seed: u64) -> Check {
    let inst = classification_instance(seed, 8, 3);
    let cfg = TransducerConfig::classification();
    let c = build_predictor(&inst.train, &inst.x, &cfg, Adjustment::Conditioned)
        .map_err(|e| e.to_string())?;
    let s = build_predictor(&inst.train, &inst.x, &cfg, Adjustment::Stretched)
        .map_err(|e| e.to_string())?;
    let (cv, sv) = (c.contour.values(), s.contour.values());
    for l in 0..cv.len() {
        if sv[l] > cv[l] {
            return Err(format!(
                "label {l}: stretched {} > conditioned {}",
                sv[l], cv[l]
            ));
        }
    }
    let am = s.contour.argmax().unwrap();
    if sv[am] != cv[am] || sv[am] != Ratio::from_integer(1) {
        return Err("contours differ at the argmax".into());
    }
    let alpha = rng(seed).random_range(0.0..1.0);
    let ss = labels_of(&prediction_set(&s, alpha).unwrap());
    let cs = labels_of(&prediction_set(&c, alpha).unwrap());
    if !ss.is_subset(&cs) {
        return Err(format!(
            "alpha {alpha}: stretched set not inside conditioned set"
        ));
    }
    Ok(())
}

/// Reordering training rows leaves every contour unchanged.
pub fn check_permutation_invariance(seed: u64) -> Check {
    let mut r = rng(seed ^ 0x9E37);
    let inst = classification_instance(seed, 8, 3);
    let perm = shuffled(&inst.train, &mut r);
    for adj in ADJ {
        let cfg = TransducerConfig::classification();
        let a = build_predictor(&inst.train, &inst.x, &cfg, adj).map_err(|e| e.to_string())?;
        let b = build_predictor(&perm, &inst.x, &cfg, adj).map_err(|e| e.to_string())?;
        if a.contour != b.contour {
            return Err(format!("{adj}: contour changed under permutation"));
        }
    }
    let (inst, knn, _) = regression_instance(seed, 8);
    let perm = shuffled(&inst.train, &mut r);
    let lambda = r.random_range(0.1..2.0);
    for predictor in [knn, PointPredictor::Ridge { lambda }] {
        let cfg = TransducerConfig::regression(predictor);
        let a = contour(&inst.train, &inst.x, &cfg).map_err(|e| e.to_string())?;
        let b = contour(&perm, &inst.x, &cfg).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!(
                "{predictor:?}: regression contour changed under permutation"
            ));
        }
    }
    Ok(())
}

/// Work that fans out over the thread pool: a regression contour on the
/// default grid, a small validity sweep and a classification contour.
pub fn parallel_workload(seed: u64) -> String {
    use possic::diagnostics::{alpha_grid, validity_sweep, GeneratorSpec};
    let (inst, predictor, _) = regression_instance(seed, 8);
    let reg = contour(
        &inst.train,
        &inst.x,
        &TransducerConfig::regression(predictor),
    )
    .unwrap();
    let cls = classification_instance(seed, 8, 3);
    let cc = contour_classification(&cls.train, &cls.x).unwrap();
    let gen = if seed.is_multiple_of(2) {
        GeneratorSpec::sin_cubed(seed)
    } else {
        GeneratorSpec::three_labels(seed)
    };
    let cfg = if seed.is_multiple_of(2) {
        TransducerConfig::regression(PointPredictor::KnnMean { k: 2 })
    } else {
        TransducerConfig::classification()
    };
    let v = validity_sweep(&gen, 4, &cfg, adjust_for(seed), 12, &alpha_grid(0.25)).unwrap();
    format!("{reg:?}|{cc:?}|{v:?}")
}

fn adjust_for(seed: u64) -> Adjustment {
    ADJ[(seed % 3) as usize]
}

/// Runs `f` on a pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn in_pool<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

/// One worker and four workers give bit-identical results.
pub fn check_parallel_determinism(seed: u64) -> Check {
    let serial = in_pool(1, || parallel_workload(seed));
    let parallel = in_pool(4, || parallel_workload(seed));
    if serial != parallel {
        return Err("results depend on the thread count".into());
    }
    Ok(())
}
