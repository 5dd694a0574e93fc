//! Running a plan and reporting the result.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ingest::Excluded;
use super::plan::{AnalysisPlan, PlanDocument};
use crate::beta_binomial::{BetaParams, BinomialObservation};
use crate::engine::{
    compose, encompassing_bf, posteriors, savage_dickey_bf, BayesFactorEstimate, Evidence, Hypothesis, LogSe,
};
use crate::error::{Error, Result};
use crate::rng::RNG_ALGORITHM;

pub const REPORT_SCHEMA: u32 = 1;
pub const SOFTWARE_VERSION: &str = concat!("encompass ", env!("CARGO_PKG_VERSION"));

/// Where the prior of a replication analysis came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorProvenance {
    pub original_plan_fingerprint: String,
    pub original_priors: Vec<BetaParams>,
    pub original_counts: Vec<BinomialObservation>,
}

/// The headline comparison with its evidence category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub estimate: BayesFactorEstimate,
    pub evidence: Evidence,
    /// Hypothesis the evidence favours.
    pub favours: Hypothesis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema: u32,
    pub software_version: String,
    pub rng: String,
    pub plan_fingerprint: String,
    pub seed: u64,
    /// Plan as executed (replication plans carry the updated priors).
    pub plan: PlanDocument,
    pub measures: Vec<String>,
    pub counts: Vec<BinomialObservation>,
    pub priors: Vec<BetaParams>,
    pub posteriors: Vec<BetaParams>,
    /// Canonical-direction estimates: `BF_e0`, `BF_er`, `BF_r0`, as available.
    pub estimates: Vec<BayesFactorEstimate>,
    pub target: TargetResult,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<Excluded>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_provenance: Option<PriorProvenance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Computes every Bayes factor the plan's hypotheses allow: Savage-Dickey
/// `BF_e0` for a point null, encompassing `BF_er` for a restriction and,
/// with both, `BF_r0 = BF_re × BF_e0`.
pub fn run_analysis(plan: &AnalysisPlan, counts: &[BinomialObservation]) -> Result<StudyReport> {
    if counts.len() != plan.k() {
        return Err(Error::DimensionMismatch {
            what: "counts",
            expected: plan.k(),
            found: counts.len(),
        });
    }
    let posts = posteriors(&plan.priors, counts)?;
    let no_data = counts.iter().all(|c| c.trials() == 0);

    let e0 = plan
        .point_null
        .as_ref()
        .map(|point| savage_dickey_bf(&plan.priors, counts, point))
        .transpose()?;
    let er = plan
        .restriction
        .as_ref()
        .map(|cs| {
            if no_data {
                // identical prior and posterior: sampling would only add noise
                cs.validate()?;
                Ok(BayesFactorEstimate::no_data(
                    Hypothesis::Encompassing,
                    Hypothesis::Restricted,
                ))
            } else {
                encompassing_bf(&plan.priors, counts, cs, &plan.mc)
            }
        })
        .transpose()?;
    let r0 = match (&e0, &er) {
        (Some(e0), Some(er)) => Some(compose(&er.reciprocal(), e0)?),
        _ => None,
    };
    let estimates: Vec<BayesFactorEstimate> = [e0, er, r0].into_iter().flatten().collect();

    let target = plan.target;
    let estimate = estimates
        .iter()
        .find_map(|est| {
            if est.numerator == target.numerator && est.denominator == target.denominator {
                Some(est.clone())
            } else if est.numerator == target.denominator && est.denominator == target.numerator {
                Some(est.reciprocal())
            } else {
                None
            }
        })
        .ok_or_else(|| Error::Plan(format!("target BF_{} cannot be derived from the plan", target.symbol())))?;
    let favours = if estimate.log_bf >= 0.0 {
        estimate.numerator
    } else {
        estimate.denominator
    };

    let mut warnings: Vec<String> = estimates.iter().flat_map(|e| e.warnings.iter().cloned()).collect();
    warnings.dedup();
    if no_data {
        warnings.push("no trials in the data; posteriors equal the priors".into());
    }

    Ok(StudyReport {
        schema: REPORT_SCHEMA,
        software_version: SOFTWARE_VERSION.into(),
        rng: RNG_ALGORITHM.into(),
        plan_fingerprint: plan.fingerprint(),
        seed: plan.mc.seed,
        plan: plan.to_document(),
        measures: plan.measures.clone(),
        counts: counts.to_vec(),
        priors: plan.priors.clone(),
        posteriors: posts,
        target: TargetResult {
            evidence: estimate.evidence(),
            favours,
            estimate,
        },
        estimates,
        excluded: Vec::new(),
        prior_provenance: None,
        warnings,
    })
}

impl StudyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Plan(format!("unreadable report: {e}")))
    }

    /// Re-runs the analysis from the report's own fields.
    pub fn recompute(&self) -> Result<StudyReport> {
        let plan = AnalysisPlan::from_document(self.plan.clone())?;
        run_analysis(&plan, &self.counts)
    }

    /// Human-readable summary.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = self.measures.iter().map(String::len).max().unwrap_or(0).max(7);
        let _ = writeln!(out, "plan {}  seed {}", &self.plan_fingerprint[..16], self.seed);
        if let Some(p) = &self.prior_provenance {
            let _ = writeln!(
                out,
                "priors updated from original study (plan {})",
                &p.original_plan_fingerprint[..16]
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>22}  {:>22}",
            "measure", "x / n", "prior", "posterior"
        );
        for (i, m) in self.measures.iter().enumerate() {
            let c = &self.counts[i];
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>22}  {:>22}",
                m,
                format!("{} / {}", c.successes(), c.trials()),
                self.priors[i].to_string(),
                self.posteriors[i].to_string()
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "BF               value         log       MC SE  method           evidence"
        );
        for est in &self.estimates {
            for e in [est.clone(), est.reciprocal()] {
                let se = match e.mc_log_se {
                    LogSe::Exact => "exact".to_string(),
                    LogSe::Estimated(se) => format!("{se:.2e}"),
                };
                let _ = writeln!(
                    out,
                    "{:<6}  {:>14}  {:>10.4}  {:>10}  {:<15}  {}",
                    e.label(),
                    format_linear(&e),
                    e.log_bf,
                    se,
                    e.method.as_str(),
                    evidence_phrase(&e)
                );
            }
        }
        let t = &self.target;
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "target {} = {} ({})",
            t.estimate.label(),
            format_linear(&t.estimate),
            evidence_phrase(&t.estimate)
        );
        out
    }
}

fn format_linear(e: &BayesFactorEstimate) -> String {
    match e.bf {
        Some(bf) if (1e-3..1e6).contains(&bf) => format!("{bf:.4}"),
        Some(bf) => format!("{bf:.4e}"),
        None => "exceeds range".into(),
    }
}

fn evidence_phrase(e: &BayesFactorEstimate) -> String {
    let ev = e.evidence();
    if ev == Evidence::None {
        return ev.as_str().into();
    }
    let favoured = if e.log_bf > 0.0 { e.numerator } else { e.denominator };
    format!("{} evidence for H_{}", ev.as_str(), favoured.symbol())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::plan::tests::WYMAN_VYSE;

    fn obs(x: u64, n: u64) -> BinomialObservation {
        BinomialObservation::new(x, n).unwrap()
    }

    fn small_plan() -> AnalysisPlan {
        let mut plan = AnalysisPlan::from_toml(WYMAN_VYSE).unwrap();
        plan.mc = plan.mc.samples(50_000);
        plan
    }

    #[test]
    fn reports_all_directions() {
        let plan = small_plan();
        let report = run_analysis(&plan, &[obs(41, 52), obs(24, 52)]).unwrap();
        let labels: Vec<_> = report.estimates.iter().map(|e| e.label()).collect();
        assert_eq!(labels, ["BF_e0", "BF_er", "BF_r0"]);
        assert_eq!(report.target.estimate.label(), "BF_r0");
        assert_eq!(report.target.favours, Hypothesis::Restricted);
        assert_eq!(report.target.evidence, Evidence::Extreme);
        assert_eq!(report.posteriors[0], BetaParams::new(42.0, 12.0).unwrap());
        let table = report.render_table();
        for needle in [
            "BF_r0",
            "BF_0r",
            "BF_er",
            "BF_re",
            "BF_e0",
            "BF_0e",
            "extreme evidence for H_r",
            "target BF_r0",
        ] {
            assert!(table.contains(needle), "{needle} missing from\n{table}");
        }
    }

    #[test]
    fn report_is_self_contained() {
        let plan = small_plan();
        let report = run_analysis(&plan, &[obs(41, 52), obs(24, 52)]).unwrap();
        let json = report.to_json();
        let back = StudyReport::from_json(&json).unwrap();
        assert_eq!(back, report);
        let again = back.recompute().unwrap();
        assert_eq!(again.to_json(), json);
    }

    #[test]
    fn point_null_only_without_data() {
        let mut plan = small_plan();
        plan.restriction = None;
        plan.target = crate::pipeline::plan::Comparison::parse("0e").unwrap();
        let report = run_analysis(&plan, &[BinomialObservation::empty(); 2]).unwrap();
        assert!(report.estimates.iter().all(|e| e.log_bf == 0.0 && e.bf == Some(1.0)));
        assert_eq!(report.target.estimate.label(), "BF_0e");
        assert!(report.warnings.iter().any(|w| w.contains("no trials")));
    }

    #[test]
    fn no_trials_gives_unit_factors() {
        let plan = small_plan();
        let report = run_analysis(&plan, &[BinomialObservation::empty(); 2]).unwrap();
        assert_eq!(report.estimates.len(), 3);
        assert!(report
            .estimates
            .iter()
            .all(|e| e.log_bf == 0.0 && e.mc_log_se == LogSe::Exact));
        assert_eq!(report.target.evidence, Evidence::None);
        assert_eq!(report.target.estimate.label(), "BF_r0");
        assert!(report.warnings.iter().any(|w| w.contains("no trials")));
    }

    #[test]
    fn dimension_and_degenerate_errors() {
        let plan = small_plan();
        assert!(matches!(
            run_analysis(&plan, &[obs(1, 2)]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut plan = small_plan();
        plan.mc = plan.mc.samples(1000);
        // posterior mass of astro < psy is ~1e-600
        let err = run_analysis(&plan, &[obs(0, 2000), obs(2000, 2000)]).unwrap_err();
        assert!(matches!(err, Error::DegenerateCount { posterior_count: 0, .. }));
    }
}
