//! Graph surgery for clinician interventions.
//!
//! `Isolate` cuts every edge touching the node. The node keeps its prior
//! marginal from the unmodified network and each former child averages its
//! table over that prior, so the rest of the network behaves as if the node
//! were unobserved and its descendants lose all information about it.
//! `Set` is the textbook operation: incoming edges are cut and the node is
//! clamped to a state; outgoing edges stay.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{node_marginal, EvidenceMap, InferenceError};
use crate::graph::{BayesianNetwork, Factor, NetworkSpec, TabularCpd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intervention {
    Isolate,
    Set(usize),
}

/// Intervened nodes by name. Serializes as a plain list of names when every
/// entry is an isolation and as a `{node: intervention}` map otherwise; both
/// forms are accepted on input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterventionSet(BTreeMap<String, Intervention>);

impl InterventionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn isolating<I, S>(nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(
            nodes
                .into_iter()
                .map(|n| (n.into(), Intervention::Isolate))
                .collect(),
        )
    }

    pub fn isolate(&mut self, node: impl Into<String>) {
        self.0.insert(node.into(), Intervention::Isolate);
    }

    pub fn set(&mut self, node: impl Into<String>, state: usize) {
        self.0.insert(node.into(), Intervention::Set(state));
    }

    pub fn remove(&mut self, node: &str) -> Option<Intervention> {
        self.0.remove(node)
    }

    pub fn get(&self, node: &str) -> Option<Intervention> {
        self.0.get(node).copied()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.0.contains_key(node)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Intervention)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InterventionRepr {
    Isolated(Vec<String>),
    Mixed(BTreeMap<String, Intervention>),
}

impl Serialize for InterventionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.values().all(|v| *v == Intervention::Isolate) {
            InterventionRepr::Isolated(self.0.keys().cloned().collect()).serialize(serializer)
        } else {
            InterventionRepr::Mixed(self.0.clone()).serialize(serializer)
        }
    }
}

impl<'de> Deserialize<'de> for InterventionSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match InterventionRepr::deserialize(deserializer)? {
            InterventionRepr::Isolated(nodes) => InterventionSet::isolating(nodes),
            InterventionRepr::Mixed(map) => InterventionSet(map),
        })
    }
}

/// Returns the mutilated network; `net` is left untouched.
pub fn apply_do(
    net: &BayesianNetwork,
    interventions: &InterventionSet,
) -> Result<BayesianNetwork, InferenceError> {
    let n = net.len();
    let mut action: Vec<Option<Intervention>> = vec![None; n];
    for (name, iv) in interventions.iter() {
        let i = net
            .index_of(name)
            .map_err(|_| InferenceError::UnknownNode(name.to_string()))?;
        if let Intervention::Set(s) = iv {
            if s >= net.cardinality(i) {
                return Err(InferenceError::StateOutOfRange {
                    node: name.to_string(),
                    state: s,
                    cardinality: net.cardinality(i),
                });
            }
        }
        action[i] = Some(iv);
    }
    if action.iter().all(Option::is_none) {
        return Ok(net.clone());
    }

    let mut priors: Vec<Option<Vec<f64>>> = vec![None; n];
    for i in 0..n {
        if action[i] == Some(Intervention::Isolate) {
            priors[i] = Some(node_marginal(net, i, &[])?);
        }
    }

    let mut cpds = Vec::with_capacity(n);
    for i in 0..n {
        let name = net.name(i).to_string();
        let cpd = match action[i] {
            Some(Intervention::Isolate) => TabularCpd::new(
                name,
                vec![],
                net.cardinality(i),
                priors[i].clone().expect("computed"),
            ),
            Some(Intervention::Set(s)) => {
                let mut v = vec![0.0; net.cardinality(i)];
                v[s] = 1.0;
                TabularCpd::new(name, vec![], net.cardinality(i), v)
            }
            None => {
                let isolated_parents: Vec<usize> = net
                    .parents(i)
                    .iter()
                    .copied()
                    .filter(|&p| action[p] == Some(Intervention::Isolate))
                    .collect();
                if isolated_parents.is_empty() {
                    Ok(net.cpd(i).clone())
                } else {
                    let mut f = net.factor(i);
                    for p in isolated_parents {
                        let prior = Factor::new(
                            vec![p],
                            vec![net.cardinality(p)],
                            priors[p].clone().unwrap(),
                        )
                        .expect("prior shape");
                        f = f
                            .product(&prior)
                            .expect("same cardinality")
                            .marginalize(p)
                            .expect("in scope");
                    }
                    let parents = f.scope()[1..]
                        .iter()
                        .map(|&p| net.name(p).to_string())
                        .collect();
                    TabularCpd::new(name, parents, net.cardinality(i), f.into_values())
                }
            }
        }
        .expect("well-shaped table");
        cpds.push(cpd);
    }

    let spec = net.spec();
    let edges = spec
        .edges
        .iter()
        .filter(|(p, c)| {
            let (pi, ci) = (spec.node_index(p).unwrap(), spec.node_index(c).unwrap());
            action[ci].is_none() && action[pi] != Some(Intervention::Isolate)
        })
        .cloned()
        .collect();
    Ok(BayesianNetwork::new(
        NetworkSpec::new(spec.nodes.clone(), edges),
        cpds,
    )?)
}

/// Evidence that still applies after `interventions`: observations of
/// intervened nodes are dropped, as are observations of former children of an
/// isolated node that are left with no edges at all.
pub fn effective_evidence(
    net: &BayesianNetwork,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> EvidenceMap {
    if interventions.is_empty() {
        return evidence.clone();
    }
    let mut out = evidence.clone();
    out.retain(|node, _| !interventions.contains(node));
    for (name, iv) in interventions.iter() {
        if iv != Intervention::Isolate {
            continue;
        }
        let Ok(i) = net.index_of(name) else { continue };
        for &c in net.children(i) {
            let detached = net.children(c).is_empty()
                && net
                    .parents(c)
                    .iter()
                    .all(|&p| interventions.get(net.name(p)) == Some(Intervention::Isolate));
            if detached {
                out.remove(net.name(c));
            }
        }
    }
    out
}
