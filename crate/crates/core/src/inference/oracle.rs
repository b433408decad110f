//! Reference posteriors by full joint enumeration. Slow, and deliberately
//! independent of the factor code.

use std::collections::BTreeMap;

use super::{EvidenceMap, InferenceError, InterventionSet, PosteriorReport};
use crate::graph::BayesianNetwork;

/// Largest joint state space the enumerator will walk.
pub const MAX_JOINT_CONFIGURATIONS: u128 = 1 << 24;

pub fn brute_force_joint(
    net: &BayesianNetwork,
    query: &[&str],
    evidence: &EvidenceMap,
) -> Result<PosteriorReport, InferenceError> {
    let ev = evidence.resolve(net)?;
    let query_idx: Vec<usize> = query
        .iter()
        .map(|q| {
            let i = net
                .index_of(q)
                .map_err(|_| InferenceError::UnknownNode(q.to_string()))?;
            if evidence.contains(q) {
                return Err(InferenceError::QueryInEvidence(q.to_string()));
            }
            Ok(i)
        })
        .collect::<Result<_, _>>()?;

    let n = net.len();
    let configurations: u128 = (0..n).map(|i| net.cardinality(i) as u128).product();
    if configurations > MAX_JOINT_CONFIGURATIONS {
        return Err(InferenceError::StateSpaceTooLarge { configurations });
    }

    let mut fixed: Vec<Option<usize>> = vec![None; n];
    for &(v, s) in &ev {
        fixed[v] = Some(s);
    }
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let mut assignment: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
    let mut sums: Vec<Vec<f64>> = query_idx
        .iter()
        .map(|&q| vec![0.0; net.cardinality(q)])
        .collect();
    let mut total = 0.0;

    loop {
        let p: f64 = (0..n).map(|i| net.local_prob(i, &assignment)).product();
        total += p;
        for (k, &q) in query_idx.iter().enumerate() {
            sums[k][assignment[q]] += p;
        }
        // odometer over the free variables, last varying fastest
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return finish(query, sums, total, evidence);
            }
            pos -= 1;
            let v = free[pos];
            assignment[v] += 1;
            if assignment[v] < net.cardinality(v) {
                break;
            }
            assignment[v] = 0;
        }
    }
}

fn finish(
    query: &[&str],
    sums: Vec<Vec<f64>>,
    total: f64,
    evidence: &EvidenceMap,
) -> Result<PosteriorReport, InferenceError> {
    if total == 0.0 {
        return Err(InferenceError::InconsistentEvidence);
    }
    let marginals: BTreeMap<String, Vec<f64>> = query
        .iter()
        .zip(sums)
        .map(|(q, s)| (q.to_string(), s.into_iter().map(|x| x / total).collect()))
        .collect();
    Ok(PosteriorReport {
        marginals,
        evidence: evidence.clone(),
        interventions: InterventionSet::default(),
    })
}
