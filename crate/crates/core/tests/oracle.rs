//! Library results against brute-force computations from the definitions.

mod common;

use common::*;
use possic::diagnostics::{bayes_t_predictive, NigPrior};
use possic::types::Assertion;

#[test]
fn classification_matches_brute_force() {
    for seed in 0..300 {
        let inst = classification_instance(seed, 6, 3);
        if let Err(e) = check_classification_oracle(&inst) {
            panic!("seed {seed}: {e}");
        }
    }
}

#[test]
fn regression_matches_brute_force() {
    for seed in 0..300 {
        if let Err(e) = check_regression_oracle(seed) {
            panic!("seed {seed}: {e}");
        }
    }
}

#[test]
fn tied_maximum_instances_are_exercised() {
    let tied = (0..300)
        .map(|s| oracle_classification(&classification_instance(s, 6, 3)))
        .filter(|o| {
            let max = o.raw.iter().max().unwrap();
            o.raw.len() > 1 && o.raw.iter().filter(|v| *v == max).count() > 1
        })
        .count();
    assert!(tied > 10, "only {tied} tied instances");
}

/// Composite Simpson's rule on the location-scale t density.
fn t_interval_quadrature(df: f64, loc: f64, scale: f64, lo: f64, hi: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp()
        / ((df * std::f64::consts::PI).sqrt() * scale);
    let f = |y: f64| {
        let z = (y - loc) / scale;
        c * (1.0 + z * z / df).powf(-(df + 1.0) / 2.0)
    };
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn bayes_interval_probability_matches_quadrature() {
    let samples: [&[f64]; 4] = [
        &[1.2, -3.4, 4.1, 0.3, 2.2],
        &[4.9, 4.5, 3.2, 4.0, 3.7],
        &[-4.0, -4.5, -3.9, -4.2, -4.8],
        &[0.0],
    ];
    for ys in samples {
        for prior in [
            NigPrior::default(),
            NigPrior {
                m0: 1.0,
                k0: 0.5,
                a0: 2.0,
                b0: 3.0,
            },
        ] {
            let p = bayes_t_predictive(ys, prior).unwrap();
            let got = p.prob(&Assertion::interval(3.0, 5.0));
            let want = t_interval_quadrature(p.df, p.location, p.scale, 3.0, 5.0);
            assert!((got - want).abs() < 1e-6, "{ys:?}: {got} vs {want}");
        }
    }
}
