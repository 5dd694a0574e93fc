//! Trial-level and aggregated data input.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::plan::{AnalysisPlan, ExclusionRule};
use crate::beta_binomial::BinomialObservation;
use crate::error::{Error, Result};

/// One participant's outcome on one measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant_id: String,
    pub measure: String,
    pub correct: bool,
    /// Line of the source file the record came from, 0 if none.
    #[serde(skip)]
    pub line: u64,
}

impl TrialRecord {
    pub fn new(participant_id: impl Into<String>, measure: impl Into<String>, correct: bool) -> Self {
        Self {
            participant_id: participant_id.into(),
            measure: measure.into(),
            correct,
            line: 0,
        }
    }
}

/// A participant dropped by one or more exclusion rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excluded {
    pub participant_id: String,
    /// Every rule that fired, in canonical order.
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingested {
    pub counts: Vec<BinomialObservation>,
    pub excluded: Vec<Excluded>,
}

const HEADER: [&str; 3] = ["participant_id", "measure", "correct"];

/// Parses `participant_id,measure,correct` CSV. `correct` accepts 0, 1,
/// true or false.
pub fn parse_trials_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(|e| csv_error(1, e))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Ingest {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(line, e)
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(Error::Ingest {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let (id, measure, correct) = (&row[0], &row[1], &row[2]);
        if id.is_empty() || measure.is_empty() {
            return Err(Error::Ingest {
                line,
                message: "participant_id and measure must be non-empty".into(),
            });
        }
        let correct = match correct.to_ascii_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::Ingest {
                    line,
                    message: format!("`correct` must be one of 0, 1, true, false; found {other:?}"),
                })
            }
        };
        out.push(TrialRecord {
            participant_id: id.to_string(),
            measure: measure.to_string(),
            correct,
            line,
        });
    }
    Ok(out)
}

fn csv_error(line: u64, e: csv::Error) -> Error {
    Error::Ingest {
        line,
        message: e.to_string(),
    }
}

/// Aggregates trial records into per-measure counts after applying the
/// plan's exclusion rules.
pub fn ingest_trials<I>(records: I, plan: &AnalysisPlan) -> Result<Ingested>
where
    I: IntoIterator<Item = TrialRecord>,
{
    // participant -> measure index -> correct
    let mut by_participant: BTreeMap<String, BTreeMap<usize, bool>> = BTreeMap::new();
    for rec in records {
        let k = plan.measure_index(&rec.measure).ok_or_else(|| Error::Ingest {
            line: rec.line,
            message: format!(
                "participant {:?} has unknown measure {:?} (plan measures: {})",
                rec.participant_id,
                rec.measure,
                plan.measures.join(", ")
            ),
        })?;
        let trials = by_participant.entry(rec.participant_id.clone()).or_default();
        if trials.insert(k, rec.correct).is_some() {
            return Err(Error::Ingest {
                line: rec.line,
                message: format!(
                    "duplicate trial for participant {:?} on measure {:?}",
                    rec.participant_id, rec.measure
                ),
            });
        }
    }

    let mut counts = vec![(0u64, 0u64); plan.k()];
    let mut excluded = Vec::new();
    for (id, trials) in &by_participant {
        let fired: BTreeSet<String> = plan
            .exclusions
            .iter()
            .filter(|rule| excludes(rule, plan, id, trials))
            .map(ToString::to_string)
            .collect();
        if !fired.is_empty() {
            excluded.push(Excluded {
                participant_id: id.clone(),
                rules: fired.into_iter().collect(),
            });
            continue;
        }
        for (&k, &correct) in trials {
            counts[k].0 += correct as u64;
            counts[k].1 += 1;
        }
    }
    let counts = counts
        .into_iter()
        .map(|(x, n)| BinomialObservation::new(x, n))
        .collect::<Result<_>>()?;
    Ok(Ingested { counts, excluded })
}

fn excludes(rule: &ExclusionRule, plan: &AnalysisPlan, id: &str, trials: &BTreeMap<usize, bool>) -> bool {
    match rule {
        ExclusionRule::MissingAnyMeasure => trials.len() < plan.k(),
        ExclusionRule::MissingMeasure { measure } => {
            plan.measure_index(measure).is_some_and(|k| !trials.contains_key(&k))
        }
        ExclusionRule::ParticipantIds { ids } => ids.iter().any(|x| x == id),
    }
}

/// Parses an aggregated counts document:
///
/// ```toml
/// [psy]
/// successes = 41
/// trials = 52
/// ```
///
/// Every plan measure must appear exactly once; no others are allowed.
pub fn parse_counts(text: &str, plan: &AnalysisPlan) -> Result<Vec<BinomialObservation>> {
    let map: BTreeMap<String, BinomialObservation> = toml::from_str(text).map_err(|e| Error::Counts(e.to_string()))?;
    if let Some(extra) = map.keys().find(|k| plan.measure_index(k).is_none()) {
        return Err(Error::Counts(format!(
            "measure {extra:?} is not in the plan (plan measures: {})",
            plan.measures.join(", ")
        )));
    }
    plan.measures
        .iter()
        .map(|m| {
            map.get(m)
                .copied()
                .ok_or_else(|| Error::Counts(format!("missing counts for measure {m:?}")))
        })
        .collect()
}

/// Renders counts in the format read by [`parse_counts`].
pub fn counts_to_toml(measures: &[String], counts: &[BinomialObservation]) -> String {
    let map: BTreeMap<&String, &BinomialObservation> = measures.iter().zip(counts).collect();
    toml::to_string(&map).expect("counts always serialize")
}
