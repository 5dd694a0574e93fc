//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers or text and returns a JSON string. The
//! `*_json` functions hold the logic and are usable (and tested) natively.

use encompass::oracle::exact_bf_er_pairwise;
use encompass::pipeline::{density_grid, parse_counts, run_analysis, run_replication, AnalysisPlan};
use encompass::{
    encompassing_bf, log_beta_pdf, savage_dickey_bf, update_posterior, BetaParams, BinomialObservation, ConstraintSet,
    McSettings, PointNull,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

type ApiResult = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn to_json(value: &impl Serialize) -> ApiResult {
    serde_json::to_string(value).map_err(err)
}

#[derive(Serialize)]
struct DensityCurves {
    theta: Vec<f64>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
    posterior_params: BetaParams,
    null_value: f64,
    prior_at_null: f64,
    posterior_at_null: f64,
    log_bf_e0: f64,
    bf_e0: Option<f64>,
    bf_0e: Option<f64>,
    evidence: String,
}

/// Prior and posterior curves for one binomial rate, with the Savage-Dickey
/// ratio at `null_value`.
pub fn density_curves_json(
    prior_alpha: f64,
    prior_beta: f64,
    successes: u32,
    trials: u32,
    null_value: f64,
    resolution: u32,
) -> ApiResult {
    let prior = BetaParams::new(prior_alpha, prior_beta).map_err(err)?;
    let data = BinomialObservation::new(successes.into(), trials.into()).map_err(err)?;
    let post = update_posterior(prior, data);
    let rows = density_grid(&[prior], &[post], resolution as usize).map_err(err)?;
    let point = PointNull::new(vec![null_value]).map_err(err)?;
    let sd = savage_dickey_bf(&[prior], &[data], &point).map_err(err)?;
    let back = sd.reciprocal();
    to_json(&DensityCurves {
        theta: rows.iter().map(|r| r.theta).collect(),
        prior: rows.iter().map(|r| r.prior_density).collect(),
        posterior: rows.iter().map(|r| r.posterior_density).collect(),
        posterior_params: post,
        null_value,
        prior_at_null: log_beta_pdf(prior, null_value).map_err(err)?.exp(),
        posterior_at_null: log_beta_pdf(post, null_value).map_err(err)?.exp(),
        log_bf_e0: sd.log_bf,
        bf_e0: sd.bf,
        bf_0e: back.bf,
        evidence: format!(
            "{} (favours H_{})",
            sd.evidence().as_str(),
            if sd.log_bf >= 0.0 { "e" } else { "0" }
        ),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplorerRequest {
    /// `[alpha, beta]` per coordinate.
    priors: [[f64; 2]; 2],
    /// `[successes, trials]` per coordinate.
    counts: [[u64; 2]; 2],
    /// `[i, j]`: θ_i < θ_j.
    relation: [usize; 2],
    samples: u64,
    seed: u64,
}

#[derive(Serialize)]
struct ExplorerResponse {
    estimate: encompass::BayesFactorEstimate,
    exact_log_bf_er: f64,
    exact_bf_er: f64,
    z: Option<f64>,
}

/// Monte Carlo `BF_er` for two rates under one order restriction, next to
/// the exact quadrature value.
pub fn encompassing_explorer_json(request: &str) -> ApiResult {
    let req: ExplorerRequest = serde_json::from_str(request).map_err(err)?;
    let beta = |[a, b]: [f64; 2]| BetaParams::new(a, b).map_err(err);
    let obs = |[x, n]: [u64; 2]| BinomialObservation::new(x, n).map_err(err);
    let priors = [beta(req.priors[0])?, beta(req.priors[1])?];
    let data = [obs(req.counts[0])?, obs(req.counts[1])?];
    let cs = ConstraintSet::new(2, vec![(req.relation[0], req.relation[1])]).map_err(err)?;
    let mc = McSettings::with_seed(req.seed).samples(req.samples);
    let estimate = encompassing_bf(&priors, &data, &cs, &mc).map_err(err)?;
    let posts = [
        update_posterior(priors[0], data[0]),
        update_posterior(priors[1], data[1]),
    ];
    let exact = exact_bf_er_pairwise(priors, posts, &cs).map_err(err)?;
    let se = estimate.mc_log_se.value();
    to_json(&ExplorerResponse {
        z: (se > 0.0).then(|| (estimate.log_bf - exact) / se),
        exact_bf_er: exact.exp(),
        exact_log_bf_er: exact,
        estimate,
    })
}

#[derive(Serialize)]
struct ReportResponse {
    report: encompass::pipeline::StudyReport,
    table: String,
}

/// Runs a plan (TOML) on aggregated counts (TOML).
pub fn analyze_json(plan: &str, counts: &str) -> ApiResult {
    let plan = AnalysisPlan::from_toml(plan).map_err(err)?;
    let counts = parse_counts(counts, &plan).map_err(err)?;
    let report = run_analysis(&plan, &counts).map_err(err)?;
    to_json(&ReportResponse {
        table: report.render_table(),
        report,
    })
}

/// Replication: the original plan's priors are updated with the original
/// counts before the replication counts are analysed.
pub fn replicate_json(plan: &str, original_counts: &str, replication_counts: &str) -> ApiResult {
    let plan = AnalysisPlan::from_toml(plan).map_err(err)?;
    let original = parse_counts(original_counts, &plan).map_err(err)?;
    let replication = parse_counts(replication_counts, &plan).map_err(err)?;
    let report = run_replication(&plan, &original, &replication).map_err(err)?;
    to_json(&ReportResponse {
        table: report.render_table(),
        report,
    })
}

fn js(r: ApiResult) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = densityCurves)]
pub fn density_curves(
    prior_alpha: f64,
    prior_beta: f64,
    successes: u32,
    trials: u32,
    null_value: f64,
    resolution: u32,
) -> Result<String, JsError> {
    js(density_curves_json(
        prior_alpha,
        prior_beta,
        successes,
        trials,
        null_value,
        resolution,
    ))
}

#[wasm_bindgen(js_name = encompassingExplorer)]
pub fn encompassing_explorer(request: &str) -> Result<String, JsError> {
    js(encompassing_explorer_json(request))
}

#[wasm_bindgen]
pub fn analyze(plan: &str, counts: &str) -> Result<String, JsError> {
    js(analyze_json(plan, counts))
}

#[wasm_bindgen]
pub fn replicate(plan: &str, original_counts: &str, replication_counts: &str) -> Result<String, JsError> {
    js(replicate_json(plan, original_counts, replication_counts))
}
