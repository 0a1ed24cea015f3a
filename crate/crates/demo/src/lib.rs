//! Browser bindings for the possic demo page.
//!
//! Each exported function returns a JSON string. On failure the JSON is
//! `{"error": "..."}` so the page can show the message instead of throwing.
//! The `*_data` functions hold the logic and are what the native tests call.

use possic::datasets::alligator;
use possic::diagnostics::{alpha_grid, validity_sweep, GeneratorSpec};
use possic::nonconformity::PointPredictor;
use possic::possibility::build_predictor;
use possic::predsets::{prediction_set, SetKind};
use possic::transducer::TransducerConfig;
use possic::types::{plaus_to_f64, Adjustment};
use possic::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, PartialEq)]
pub struct AlligatorContours {
    pub x: f64,
    pub labels: Vec<String>,
    pub raw: Vec<f64>,
    pub conditioned: Vec<f64>,
    pub stretched: Vec<f64>,
    /// Exact values as `p/q` strings, same order as `raw`.
    pub raw_exact: Vec<String>,
}

pub fn alligator_contours_data(x: f64) -> Result<AlligatorContours> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument("length must be finite".into()));
    }
    let train = alligator();
    let cfg = TransducerConfig::classification();
    let contour = |adj| -> Result<Vec<f64>> {
        let p = build_predictor(&train, &[x], &cfg, adj)?;
        Ok(p.contour.values().into_iter().map(plaus_to_f64).collect())
    };
    let raw_p = build_predictor(&train, &[x], &cfg, Adjustment::Raw)?;
    Ok(AlligatorContours {
        x,
        labels: train.space.label_names().to_vec(),
        raw: contour(Adjustment::Raw)?,
        conditioned: contour(Adjustment::Conditioned)?,
        stretched: contour(Adjustment::Stretched)?,
        raw_exact: raw_p
            .contour
            .values()
            .iter()
            .map(|v| v.to_string())
            .collect(),
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct RegressionBand {
    pub alpha: f64,
    pub train_x: Vec<f64>,
    pub train_y: Vec<f64>,
    /// Query abscissae and, for each, the alpha-set as a list of intervals.
    pub query_x: Vec<f64>,
    pub sets: Vec<Vec<(f64, f64)>>,
}

/// Draws `n` points from the sin-cubed model and computes alpha-level
/// prediction sets on an even grid of `queries` feature values.
pub fn regression_band_data(
    seed: u64,
    n: usize,
    alpha: f64,
    k: usize,
    queries: usize,
) -> Result<RegressionBand> {
    if n < 2 || queries == 0 {
        return Err(Error::InvalidArgument(
            "need n >= 2 and at least one query".into(),
        ));
    }
    let train = GeneratorSpec::sin_cubed(seed).sample(0, n);
    let cfg = TransducerConfig::regression(PointPredictor::KnnMean { k });
    let query_x: Vec<f64> = (0..queries)
        .map(|i| (i as f64 + 0.5) / queries as f64)
        .collect();
    let sets = query_x
        .iter()
        .map(|&x| {
            let p = build_predictor(&train, &[x], &cfg, Adjustment::Raw)?;
            Ok(match prediction_set(&p, alpha)?.kind {
                SetKind::Intervals(iv) => iv,
                SetKind::Labels(_) => unreachable!("continuous response"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegressionBand {
        alpha,
        train_x: train.observations.iter().map(|o| o.x[0]).collect(),
        train_y: train
            .observations
            .iter()
            .filter_map(|o| o.y.as_real())
            .collect(),
        query_x,
        sets,
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ValidityCurve {
    pub generator: String,
    pub n: usize,
    pub reps: u64,
    pub alphas: Vec<f64>,
    pub cdf: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Empirical CDF of the realised plausibility for `sincube` or `classif3`.
pub fn validity_ecdf_data(
    generator: &str,
    n: usize,
    reps: u64,
    seed: u64,
) -> Result<ValidityCurve> {
    let (gen, cfg, adj) = match generator {
        "sincube" => (
            GeneratorSpec::sin_cubed(seed),
            TransducerConfig::regression(PointPredictor::KnnMean { k: 5 }),
            Adjustment::Raw,
        ),
        "classif3" => (
            GeneratorSpec::three_labels(seed),
            TransducerConfig::classification(),
            Adjustment::Stretched,
        ),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown generator {other:?}"
            )))
        }
    };
    let r = validity_sweep(&gen, n, &cfg, adj, reps, &alpha_grid(0.02))?;
    Ok(ValidityCurve {
        generator: generator.to_string(),
        n,
        reps,
        alphas: r.alphas,
        cdf: r.cdf,
        stderr: r.stderr,
    })
}

fn to_json<T: Serialize>(r: Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[wasm_bindgen]
pub fn alligator_contours(x: f64) -> String {
    to_json(alligator_contours_data(x))
}

#[wasm_bindgen]
pub fn regression_band(seed: u32, n: u32, alpha: f64, k: u32) -> String {
    to_json(regression_band_data(
        seed as u64,
        n as usize,
        alpha,
        k as usize,
        60,
    ))
}

#[wasm_bindgen]
pub fn validity_ecdf(generator: &str, n: u32, reps: u32, seed: u32) -> String {
    to_json(validity_ecdf_data(
        generator,
        n as usize,
        reps as u64,
        seed as u64,
    ))
}
