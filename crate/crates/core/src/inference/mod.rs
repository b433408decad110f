//! Exact inference on discrete Bayesian networks.
//!
//! Posterior marginals are computed by variable elimination. Before
//! eliminating, the network is restricted to the ancestors of the query and
//! evidence nodes (barren nodes sum to one), evidence is applied by slicing
//! factors, and only the connected component holding the query variable is
//! multiplied out. Factors in other components can only rescale the result;
//! they are still summed to detect zero-probability evidence.

mod clinical;
mod intervention;
mod oracle;

pub use clinical::{
    expected_severity, query_conditions, query_symptoms, severity_from_posteriors,
    symptom_contributions, ConditionProbabilities, SeverityReport,
};
pub use intervention::{apply_do, effective_evidence, Intervention, InterventionSet};
pub use oracle::{brute_force_joint, MAX_JOINT_CONFIGURATIONS};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BayesianNetwork, Factor, GraphError};

/// Allowed deviation of a posterior vector's sum from one.
pub const POSTERIOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("state {state} is out of range for node `{node}` (cardinality {cardinality})")]
    StateOutOfRange {
        node: String,
        state: usize,
        cardinality: usize,
    },
    #[error("node `{0}` is both queried and observed")]
    QueryInEvidence(String),
    #[error("evidence has zero probability under the network")]
    InconsistentEvidence,
    #[error("joint state space has {configurations} configurations, above the enumeration limit")]
    StateSpaceTooLarge { configurations: u128 },
    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Observed states, keyed by node name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceMap(BTreeMap<String, usize>);

impl EvidenceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: impl Into<String>, state: usize) -> Option<usize> {
        self.0.insert(node.into(), state)
    }

    pub fn with(mut self, node: impl Into<String>, state: usize) -> Self {
        self.insert(node, state);
        self
    }

    pub fn remove(&mut self, node: &str) -> Option<usize> {
        self.0.remove(node)
    }

    pub fn get(&self, node: &str) -> Option<usize> {
        self.0.get(node).copied()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.0.contains_key(node)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&str, usize) -> bool) {
        self.0.retain(|k, v| keep(k, *v));
    }

    /// Resolves names to indices and checks state ranges.
    pub fn resolve(&self, net: &BayesianNetwork) -> Result<Vec<(usize, usize)>, InferenceError> {
        self.iter()
            .map(|(name, state)| {
                let i = net
                    .index_of(name)
                    .map_err(|_| InferenceError::UnknownNode(name.to_string()))?;
                if state >= net.cardinality(i) {
                    return Err(InferenceError::StateOutOfRange {
                        node: name.to_string(),
                        state,
                        cardinality: net.cardinality(i),
                    });
                }
                Ok((i, state))
            })
            .collect()
    }
}

impl FromIterator<(String, usize)> for EvidenceMap {
    fn from_iter<I: IntoIterator<Item = (String, usize)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub marginals: BTreeMap<String, Vec<f64>>,
    pub evidence: EvidenceMap,
    pub interventions: InterventionSet,
}

impl PosteriorReport {
    pub fn get(&self, node: &str) -> Option<&[f64]> {
        self.marginals.get(node).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum EliminationOrder<'a> {
    /// Greedy min-fill; ties go to the lexicographically smallest node name.
    MinFill,
    /// Variables are eliminated in this order; variables not listed go last,
    /// by index.
    Explicit(&'a [usize]),
}

/// Conditional marginals `P(q | evidence)` for each query node.
pub fn eliminate_variables(
    net: &BayesianNetwork,
    query: &[&str],
    evidence: &EvidenceMap,
) -> Result<PosteriorReport, InferenceError> {
    let ev = evidence.resolve(net)?;
    let mut marginals = BTreeMap::new();
    for &q in query {
        let i = net
            .index_of(q)
            .map_err(|_| InferenceError::UnknownNode(q.to_string()))?;
        marginals.insert(q.to_string(), node_marginal(net, i, &ev)?);
    }
    Ok(PosteriorReport {
        marginals,
        evidence: evidence.clone(),
        interventions: InterventionSet::default(),
    })
}

pub fn node_marginal(
    net: &BayesianNetwork,
    node: usize,
    evidence: &[(usize, usize)],
) -> Result<Vec<f64>, InferenceError> {
    node_marginal_with_order(net, node, evidence, EliminationOrder::MinFill)
}

pub fn node_marginal_with_order(
    net: &BayesianNetwork,
    node: usize,
    evidence: &[(usize, usize)],
    order: EliminationOrder<'_>,
) -> Result<Vec<f64>, InferenceError> {
    let n = net.len();
    let mut observed: Vec<Option<usize>> = vec![None; n];
    for &(v, s) in evidence {
        if v >= n {
            return Err(InferenceError::InvalidOrder(format!(
                "evidence variable {v} out of range"
            )));
        }
        if s >= net.cardinality(v) {
            return Err(InferenceError::StateOutOfRange {
                node: net.name(v).to_string(),
                state: s,
                cardinality: net.cardinality(v),
            });
        }
        observed[v] = Some(s);
    }
    if observed[node].is_some() {
        return Err(InferenceError::QueryInEvidence(net.name(node).to_string()));
    }

    // Ancestral closure of query and evidence; everything else is barren.
    let mut relevant = vec![false; n];
    let mut stack: Vec<usize> = std::iter::once(node)
        .chain(evidence.iter().map(|e| e.0))
        .collect();
    while let Some(v) = stack.pop() {
        if !relevant[v] {
            relevant[v] = true;
            stack.extend_from_slice(net.parents(v));
        }
    }

    let mut factors = Vec::new();
    for v in (0..n).filter(|&v| relevant[v]) {
        let mut f = net.factor(v);
        for &var in std::iter::once(&v).chain(net.parents(v)) {
            if let Some(s) = observed[var] {
                f = f.reduce(var, s).expect("scope variable");
            }
        }
        if f.scope().is_empty() {
            if f.values()[0] == 0.0 {
                return Err(InferenceError::InconsistentEvidence);
            }
        } else {
            factors.push(f);
        }
    }

    // Connected components over shared variables.
    let mut uf = UnionFind::new(n);
    for f in &factors {
        for w in f.scope().windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let root = uf.find(node);
    let mut in_query = Vec::new();
    let mut others: BTreeMap<usize, Vec<Factor>> = BTreeMap::new();
    for f in factors {
        let r = uf.find(f.scope()[0]);
        if r == root {
            in_query.push(f);
        } else {
            others.entry(r).or_default().push(f);
        }
    }
    let ranks = name_ranks(net);
    for group in others.into_values() {
        let order = min_fill_order(&group, None, &ranks);
        let total = eliminate(group, &order).sum();
        if total == 0.0 {
            return Err(InferenceError::InconsistentEvidence);
        }
    }

    let order = match order {
        EliminationOrder::MinFill => min_fill_order(&in_query, Some(node), &ranks),
        EliminationOrder::Explicit(explicit) => explicit_order(&in_query, node, explicit),
    };
    let result = eliminate(in_query, &order);
    debug_assert_eq!(result.scope(), &[node]);
    let normalized = result
        .normalized()
        .ok_or(InferenceError::InconsistentEvidence)?;
    Ok(normalized.into_values())
}

/// Eliminates `order` from the factor set and multiplies what remains.
fn eliminate(mut factors: Vec<Factor>, order: &[usize]) -> Factor {
    for &var in order {
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(var));
        factors = without;
        let Some(first) = with.first() else { continue };
        let mut prod = first.clone();
        for f in &with[1..] {
            prod = prod.product(f).expect("consistent cardinalities");
        }
        factors.push(prod.marginalize(var).expect("variable in product"));
    }
    factors
        .into_iter()
        .reduce(|a, b| a.product(&b).expect("consistent cardinalities"))
        .unwrap_or_else(|| Factor::scalar(1.0))
}

fn name_ranks(net: &BayesianNetwork) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..net.len()).collect();
    idx.sort_by(|&a, &b| net.name(a).cmp(net.name(b)));
    let mut ranks = vec![0; net.len()];
    for (r, i) in idx.into_iter().enumerate() {
        ranks[i] = r;
    }
    ranks
}

fn interaction_graph(factors: &[Factor]) -> HashMap<usize, BTreeSet<usize>> {
    let mut adj: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for f in factors {
        for &a in f.scope() {
            let entry = adj.entry(a).or_default();
            entry.extend(f.scope().iter().copied().filter(|&b| b != a));
        }
    }
    adj
}

fn min_fill_order(factors: &[Factor], keep: Option<usize>, ranks: &[usize]) -> Vec<usize> {
    let mut adj = interaction_graph(factors);
    let mut remaining: Vec<usize> = adj.keys().copied().filter(|&v| Some(v) != keep).collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                let nb: Vec<usize> = adj[&v].iter().copied().collect();
                let mut fill = 0usize;
                for (i, &a) in nb.iter().enumerate() {
                    for &b in &nb[i + 1..] {
                        if !adj[&a].contains(&b) {
                            fill += 1;
                        }
                    }
                }
                (pos, (fill, ranks[v]))
            })
            .min_by_key(|&(_, key)| key)
            .expect("non-empty");
        let v = remaining.swap_remove(pos);
        let nb = adj.remove(&v).unwrap_or_default();
        for &a in &nb {
            let entry = adj.get_mut(&a).expect("symmetric adjacency");
            entry.remove(&v);
            entry.extend(nb.iter().copied().filter(|&b| b != a));
        }
        order.push(v);
    }
    order
}

fn explicit_order(factors: &[Factor], keep: usize, explicit: &[usize]) -> Vec<usize> {
    let present: BTreeSet<usize> = factors
        .iter()
        .flat_map(|f| f.scope().iter().copied())
        .filter(|&v| v != keep)
        .collect();
    let mut order: Vec<usize> = explicit
        .iter()
        .copied()
        .filter(|v| present.contains(v))
        .collect();
    let listed: BTreeSet<usize> = order.iter().copied().collect();
    order.extend(present.difference(&listed));
    order.dedup();
    order
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
