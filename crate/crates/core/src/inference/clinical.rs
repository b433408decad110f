//! Condition- and symptom-level queries over a condition/symptom/surrogate
//! network, with interventions applied.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    apply_do, effective_evidence, node_marginal, EvidenceMap, InferenceError, InterventionSet,
};
use crate::graph::{BayesianNetwork, Layout};

/// `P(condition = present)` keyed by condition name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionProbabilities(pub BTreeMap<String, f64>);

impl ConditionProbabilities {
    pub fn get(&self, condition: &str) -> Option<f64> {
        self.0.get(condition).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityReport {
    /// Expected ordinal severity per symptom.
    pub symptoms: BTreeMap<String, f64>,
    /// Sum of the expected severities of each condition's symptoms.
    pub totals: BTreeMap<String, f64>,
}

fn present_state(net: &BayesianNetwork, i: usize) -> usize {
    net.state_of(i, "present").unwrap_or(net.cardinality(i) - 1)
}

fn prepared(
    net: &BayesianNetwork,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> Result<(BayesianNetwork, Vec<(usize, usize)>), InferenceError> {
    evidence.resolve(net)?;
    let cut = apply_do(net, interventions)?;
    let ev = effective_evidence(net, evidence, interventions).resolve(&cut)?;
    Ok((cut, ev))
}

fn conditions_on(
    net: &BayesianNetwork,
    layout: &Layout,
    ev: &[(usize, usize)],
) -> Result<ConditionProbabilities, InferenceError> {
    let mut out = BTreeMap::new();
    for c in layout.condition_names() {
        let i = net
            .index_of(c)
            .map_err(|_| InferenceError::UnknownNode(c.to_string()))?;
        let p = node_marginal(net, i, ev)?;
        out.insert(c.to_string(), p[present_state(net, i)]);
    }
    Ok(ConditionProbabilities(out))
}

/// Uncalibrated condition probabilities under evidence and interventions.
pub fn query_conditions(
    net: &BayesianNetwork,
    layout: &Layout,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> Result<ConditionProbabilities, InferenceError> {
    let (cut, ev) = prepared(net, evidence, interventions)?;
    conditions_on(&cut, layout, &ev)
}

/// Posterior severity distribution of every symptom. Observed symptoms get a
/// point mass; isolated symptoms show their prior.
pub fn query_symptoms(
    net: &BayesianNetwork,
    layout: &Layout,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> Result<BTreeMap<String, Vec<f64>>, InferenceError> {
    let (cut, ev) = prepared(net, evidence, interventions)?;
    let mut out = BTreeMap::new();
    for s in layout.symptoms() {
        let i = cut
            .index_of(s)
            .map_err(|_| InferenceError::UnknownNode(s.to_string()))?;
        let dist = match ev.iter().find(|e| e.0 == i) {
            Some(&(_, state)) => {
                let mut v = vec![0.0; cut.cardinality(i)];
                v[state] = 1.0;
                v
            }
            None => node_marginal(&cut, i, &ev)?,
        };
        out.insert(s.to_string(), dist);
    }
    Ok(out)
}

pub fn severity_from_posteriors(
    layout: &Layout,
    posteriors: &BTreeMap<String, Vec<f64>>,
) -> SeverityReport {
    let symptoms: BTreeMap<String, f64> = posteriors
        .iter()
        .map(|(s, p)| {
            (
                s.clone(),
                p.iter().enumerate().map(|(k, x)| k as f64 * x).sum(),
            )
        })
        .collect();
    let totals = layout
        .conditions
        .iter()
        .map(|c| {
            let t = c.symptoms.iter().filter_map(|s| symptoms.get(s)).sum();
            (c.name.clone(), t)
        })
        .collect();
    SeverityReport { symptoms, totals }
}

pub fn expected_severity(
    net: &BayesianNetwork,
    layout: &Layout,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> Result<SeverityReport, InferenceError> {
    let posteriors = query_symptoms(net, layout, evidence, interventions)?;
    Ok(severity_from_posteriors(layout, &posteriors))
}

/// For each symptom, how much its observations move each condition:
/// `P(c | evidence) - P(c | evidence without the symptom and its surrogates)`.
pub fn symptom_contributions(
    net: &BayesianNetwork,
    layout: &Layout,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> Result<BTreeMap<String, BTreeMap<String, f64>>, InferenceError> {
    let (cut, _) = prepared(net, evidence, interventions)?;
    let effective = effective_evidence(net, evidence, interventions);
    let full = conditions_on(&cut, layout, &effective.resolve(&cut)?)?;
    let mut out = BTreeMap::new();
    for s in layout.symptoms() {
        let mut reduced = effective.clone();
        reduced.remove(s);
        for sur in layout.surrogates_of(s) {
            reduced.remove(&sur.name);
        }
        let per_condition = if reduced.len() == effective.len() {
            full.iter().map(|(c, _)| (c.to_string(), 0.0)).collect()
        } else {
            let without = conditions_on(&cut, layout, &reduced.resolve(&cut)?)?;
            full.iter()
                .map(|(c, p)| (c.to_string(), p - without.get(c).unwrap_or(p)))
                .collect()
        };
        out.insert(s.to_string(), per_condition);
    }
    Ok(out)
}
