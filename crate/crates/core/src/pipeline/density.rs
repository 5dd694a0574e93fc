//! Prior/posterior density tables for plotting.

use serde::Serialize;

use crate::beta_binomial::{log_beta_pdf, BetaParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub measure: usize,
    pub theta: f64,
    pub prior_density: f64,
    pub posterior_density: f64,
}

/// Densities at `θ = i / resolution` for `i = 1 … resolution − 1`, one block
/// of rows per measure. Endpoints are never emitted.
pub fn density_grid(priors: &[BetaParams], posteriors: &[BetaParams], resolution: usize) -> Result<Vec<DensityRow>> {
    if priors.len() != posteriors.len() {
        return Err(Error::DimensionMismatch {
            what: "posteriors",
            expected: priors.len(),
            found: posteriors.len(),
        });
    }
    if resolution < 2 {
        return Err(Error::Unsupported(format!(
            "density resolution must be at least 2, got {resolution}"
        )));
    }
    let mut rows = Vec::with_capacity(priors.len() * (resolution - 1));
    for (k, (prior, post)) in priors.iter().zip(posteriors).enumerate() {
        for i in 1..resolution {
            let theta = i as f64 / resolution as f64;
            rows.push(DensityRow {
                measure: k,
                theta,
                prior_density: log_beta_pdf(*prior, theta)?.exp(),
                posterior_density: log_beta_pdf(*post, theta)?.exp(),
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `measure,theta,prior_density,posterior_density`.
pub fn density_csv(measures: &[String], rows: &[DensityRow]) -> String {
    let mut out = String::from("measure,theta,prior_density,posterior_density\n");
    for r in rows {
        out += &format!(
            "{},{},{},{}\n",
            measures[r.measure], r.theta, r.prior_density, r.posterior_density
        );
    }
    out
}
