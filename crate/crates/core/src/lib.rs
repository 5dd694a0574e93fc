//! Bayes factors for hypotheses about independent binomial success
//! probabilities.
//!
//! Point nulls are tested with the Savage-Dickey density ratio, order
//! restrictions with the encompassing-prior Monte Carlo estimator, and the
//! two are chained through transitivity (`BF_0r = BF_0e × BF_er`). The
//! [`pipeline`] module wraps these in a plan/report workflow that supports
//! posterior-as-prior replication analyses.

// Quadrature tables and reference values are written with their full digits.
#![allow(clippy::excessive_precision)]

pub mod beta_binomial;
pub mod constraints;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod special;

pub use beta_binomial::{
    joint_log_pdf, log_beta_binomial_pmf, log_beta_pdf, sample_beta, update_posterior, BetaParams, BinomialObservation,
    ParamVector,
};
pub use constraints::{ConstraintSet, PointNull};
pub use engine::{
    compose, encompassing_bf, mc_standard_error, proportion_in_region, savage_dickey_bf, BayesFactorEstimate,
    Hypothesis, McSettings,
};
pub use error::{Error, Result};
pub use rng::{RngStream, StreamKey};
