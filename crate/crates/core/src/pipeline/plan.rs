//! Analysis plans.
//!
//! On disk a plan is a TOML document (schema version 1):
//!
//! ```toml
//! schema = 1
//! measures = ["psy", "astro"]
//! target = "r0"
//!
//! [priors]
//! psy = { alpha = 1, beta = 1 }
//! astro = { alpha = 1, beta = 1 }
//!
//! [point_null]
//! psy = 0.5
//! astro = 0.5
//!
//! [restriction]
//! less_than = [["astro", "psy"]]
//!
//! [mc]
//! seed = 4491
//! prior_samples = 1000000
//! posterior_samples = 1000000
//!
//! [[exclusions]]
//! rule = "missing_any_measure"
//! ```
//!
//! `target` names the comparison to headline as two hypothesis symbols
//! (`0` point null, `e` encompassing, `r` restricted), numerator first.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beta_binomial::{update_posterior, BetaParams, BinomialObservation};
use crate::constraints::{ConstraintSet, PointNull};
use crate::engine::{Hypothesis, McSettings};
use crate::error::{Error, Result};

pub const PLAN_SCHEMA: u32 = 1;

/// Serialized form of a plan. Map-valued fields are keyed by measure name and
/// stored sorted, so the JSON rendering of a document is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    pub schema: u32,
    pub measures: Vec<String>,
    pub target: String,
    pub priors: BTreeMap<String, BetaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_null: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<RestrictionDocument>,
    pub mc: McSettings,
    #[serde(default)]
    pub exclusions: Vec<ExclusionRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionDocument {
    /// Each pair `[a, b]` states `θ_a < θ_b`.
    pub less_than: Vec<[String; 2]>,
}

/// Participant-level exclusion predicates over trial completeness.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExclusionRule {
    /// Drop participants without a trial on every measure.
    MissingAnyMeasure,
    /// Drop participants without a trial on the named measure.
    MissingMeasure { measure: String },
    /// Drop the listed participants.
    ParticipantIds { ids: Vec<String> },
}

impl std::fmt::Display for ExclusionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExclusionRule::MissingAnyMeasure => f.write_str("missing_any_measure"),
            ExclusionRule::MissingMeasure { measure } => write!(f, "missing_measure({measure})"),
            ExclusionRule::ParticipantIds { .. } => f.write_str("participant_ids"),
        }
    }
}

/// A comparison `BF_{numerator, denominator}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub numerator: Hypothesis,
    pub denominator: Hypothesis,
}

impl Comparison {
    pub fn parse(s: &str) -> Result<Self> {
        let mut chars = s.chars().map(|c| Hypothesis::from_symbol(&c.to_string()));
        match (chars.next().flatten(), chars.next().flatten(), chars.next()) {
            (Some(numerator), Some(denominator), None) if numerator != denominator => {
                Ok(Self { numerator, denominator })
            }
            _ => Err(Error::Plan(format!(
                "target {s:?} is not a comparison; use two of 0, e, r (e.g. \"r0\")"
            ))),
        }
    }

    pub fn symbol(&self) -> String {
        format!("{}{}", self.numerator.symbol(), self.denominator.symbol())
    }

    fn involves(&self, h: Hypothesis) -> bool {
        self.numerator == h || self.denominator == h
    }
}

/// A validated, index-resolved plan.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPlan {
    pub measures: Vec<String>,
    pub priors: Vec<BetaParams>,
    pub point_null: Option<PointNull>,
    pub restriction: Option<ConstraintSet>,
    pub target: Comparison,
    pub mc: McSettings,
    pub exclusions: Vec<ExclusionRule>,
}

impl AnalysisPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: PlanDocument = toml::from_str(text).map_err(|e| Error::Plan(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: PlanDocument) -> Result<Self> {
        if doc.schema != PLAN_SCHEMA {
            return Err(Error::Plan(format!(
                "unsupported schema version {} (expected {PLAN_SCHEMA})",
                doc.schema
            )));
        }
        let measures = doc.measures;
        if measures.is_empty() {
            return Err(Error::Plan("at least one measure is required".into()));
        }
        for (i, m) in measures.iter().enumerate() {
            if m.is_empty() || measures[..i].contains(m) {
                return Err(Error::Plan(format!(
                    "measure names must be non-empty and unique, got {m:?}"
                )));
            }
        }
        let index = |name: &str| -> Result<usize> {
            measures
                .iter()
                .position(|m| m == name)
                .ok_or_else(|| Error::Plan(format!("unknown measure {name:?}")))
        };

        let priors = by_measure(&measures, &doc.priors, "priors")?;
        let point_null = doc
            .point_null
            .as_ref()
            .map(|values| PointNull::new(by_measure(&measures, values, "point_null")?))
            .transpose()?;
        let restriction = match &doc.restriction {
            Some(r) => {
                let pairs = r
                    .less_than
                    .iter()
                    .map(|[a, b]| Ok((index(a)?, index(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                Some(ConstraintSet::new(measures.len(), pairs).map_err(|e| match e {
                    Error::Cycle { cycle } => Error::Plan(format!(
                        "restriction is unsatisfiable, relations form a cycle: {}",
                        cycle.iter().chain(cycle.first()).map(|&i| measures[i].as_str()).collect::<Vec<_>>().join(" < ")
                    )),
                    other => Error::Plan(other.to_string()),
                })?)
            }
            None => None,
        };

        let target = Comparison::parse(&doc.target)?;
        if target.involves(Hypothesis::Null) && point_null.is_none() {
            return Err(Error::Plan(format!(
                "target BF_{} needs a point_null section",
                target.symbol()
            )));
        }
        if target.involves(Hypothesis::Restricted) && restriction.is_none() {
            return Err(Error::Plan(format!(
                "target BF_{} needs a restriction section",
                target.symbol()
            )));
        }
        doc.mc.validate()?;
        for rule in &doc.exclusions {
            if let ExclusionRule::MissingMeasure { measure } = rule {
                index(measure)?;
            }
        }

        Ok(Self {
            measures,
            priors,
            point_null,
            restriction,
            target,
            mc: doc.mc,
            exclusions: doc.exclusions,
        })
    }

    pub fn to_document(&self) -> PlanDocument {
        let named = |values: &[f64]| -> BTreeMap<String, f64> {
            self.measures.iter().cloned().zip(values.iter().copied()).collect()
        };
        PlanDocument {
            schema: PLAN_SCHEMA,
            measures: self.measures.clone(),
            target: self.target.symbol(),
            priors: self.measures.iter().cloned().zip(self.priors.iter().copied()).collect(),
            point_null: self.point_null.as_ref().map(|p| named(p.values())),
            restriction: self.restriction.as_ref().map(|cs| RestrictionDocument {
                less_than: cs
                    .relations()
                    .iter()
                    .map(|&(i, j)| [self.measures[i].clone(), self.measures[j].clone()])
                    .collect(),
            }),
            mc: self.mc,
            exclusions: self.exclusions.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.measures.len()
    }

    /// SHA-256 over the canonical JSON rendering of the plan, hex encoded.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(&self.to_document()).expect("plan documents always serialize");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|m| m == name)
    }
}

fn by_measure<T: Copy>(measures: &[String], map: &BTreeMap<String, T>, section: &str) -> Result<Vec<T>> {
    if let Some(extra) = map.keys().find(|k| !measures.contains(k)) {
        return Err(Error::Plan(format!("{section} names unknown measure {extra:?}")));
    }
    measures
        .iter()
        .map(|m| {
            map.get(m)
                .copied()
                .ok_or_else(|| Error::Plan(format!("{section} is missing measure {m:?}")))
        })
        .collect()
}

/// Replaces each prior with its posterior given the original study's counts,
/// so the original posterior becomes the replication prior.
pub fn apply_prior_knowledge(plan: &AnalysisPlan, original_counts: &[BinomialObservation]) -> Result<AnalysisPlan> {
    if original_counts.len() != plan.k() {
        return Err(Error::DimensionMismatch {
            what: "original counts",
            expected: plan.k(),
            found: original_counts.len(),
        });
    }
    let mut out = plan.clone();
    out.priors = plan
        .priors
        .iter()
        .zip(original_counts)
        .map(|(p, c)| update_posterior(*p, *c))
        .collect();
    Ok(out)
}
