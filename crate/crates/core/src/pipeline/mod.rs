//! Plan-driven study analysis: ingestion, posterior-as-prior replication,
//! Bayes factor reports, and density tables.

mod density;
mod ingest;
mod plan;
mod report;

pub use density::{density_csv, density_grid, DensityRow};
pub use ingest::{counts_to_toml, ingest_trials, parse_counts, parse_trials_csv, Excluded, Ingested, TrialRecord};
pub use plan::{
    apply_prior_knowledge, AnalysisPlan, Comparison, ExclusionRule, PlanDocument, RestrictionDocument, PLAN_SCHEMA,
};
pub use report::{run_analysis, PriorProvenance, StudyReport, TargetResult, REPORT_SCHEMA, SOFTWARE_VERSION};

use crate::beta_binomial::BinomialObservation;
use crate::error::Result;

/// Replication analysis: the original plan's priors are updated with the
/// original counts, then the replication counts are analysed under them.
pub fn run_replication(
    original_plan: &AnalysisPlan,
    original_counts: &[BinomialObservation],
    replication_counts: &[BinomialObservation],
) -> Result<StudyReport> {
    let plan = apply_prior_knowledge(original_plan, original_counts)?;
    let mut report = run_analysis(&plan, replication_counts)?;
    report.prior_provenance = Some(PriorProvenance {
        original_plan_fingerprint: original_plan.fingerprint(),
        original_priors: original_plan.priors.clone(),
        original_counts: original_counts.to_vec(),
    });
    Ok(report)
}
