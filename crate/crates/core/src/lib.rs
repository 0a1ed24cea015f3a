//! Consonant possibility predictors from conformal transducers.
//!
//! Given an exchangeable training sample and a query feature vector, the
//! conformal transducer assigns every candidate response a plausibility in
//! `{1/(n+1), ..., 1}`. Read as the contour of a possibility measure, it
//! yields upper and lower probabilities for any assertion about the next
//! response, and prediction sets `{y : pi(y) > alpha}` with coverage at
//! least `1 - alpha`.
//!
//! For finite label spaces the contour need not reach 1, so
//! [`possibility`] offers two adjustments: conditioning (divide by the
//! maximum) and stretching (lift only the maximum to 1). The
//! [`diagnostics`] module checks validity by simulation and contrasts it
//! with a conjugate Student-t predictive.
//!
//! ```
//! use possic::datasets::alligator;
//! use possic::possibility::build_predictor;
//! use possic::predsets::prediction_set;
//! use possic::transducer::TransducerConfig;
//! use possic::types::Adjustment;
//!
//! let train = alligator();
//! let p = build_predictor(&train, &[2.0], &TransducerConfig::classification(), Adjustment::Stretched)
//!     .unwrap();
//! let set = prediction_set(&p, 0.4).unwrap();
//! assert_eq!(set.size(), 2.0);
//! ```

// Negated float comparisons are how argument checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod nonconformity;
mod par;
pub mod possibility;
pub mod predsets;
pub mod transducer;
pub mod types;

pub use error::{Error, ErrorCategory, Result};
