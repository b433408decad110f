//! Discrete Bayesian networks: structure, conditional probability tables,
//! validation and the factor algebra used by inference.
//!
//! CPD tables are stored row-major over `(child state, parents in declared
//! order)`: entry `child_state * n_configs + config`, where `config` enumerates
//! parent assignments with the last parent varying fastest. This is also the
//! layout of a [`Factor`] whose scope is `[child, parents..]`.

mod factor;
mod io;
mod symptoms;

pub use factor::{Factor, FactorError};
pub use io::NetworkFile;
pub use symptoms::{
    standard_layout, standard_network, surrogate_node_name, ConditionSpec, Family, Layout,
    SurrogateSpec, ANXIETY, DEPRESSION, QUARTILES, SEVERITY_LEVELS,
};

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation of a CPD column sum from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

pub const CONDITION_STATES: [&str; 2] = ["absent", "present"];

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("cycle detected through node `{0}`")]
    Cycle(String),
    #[error("invalid network:\n{0}")]
    Invalid(ValidationReport),
    #[error("node `{node}` has no state labelled `{state}`")]
    UnknownState { node: String, state: String },
    #[error("state {state} is out of range for node `{node}` (cardinality {cardinality})")]
    StateOutOfRange {
        node: String,
        state: usize,
        cardinality: usize,
    },
    #[error("network file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("network file format: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub states: Vec<String>,
}

impl NodeSpec {
    pub fn new(name: impl Into<String>, states: Vec<String>) -> Self {
        Self {
            name: name.into(),
            states,
        }
    }

    /// Node whose states are labelled `"0"`, `"1"`, ...
    pub fn ordinal(name: impl Into<String>, cardinality: usize) -> Self {
        Self::new(name, (0..cardinality).map(|k| k.to_string()).collect())
    }

    /// Two-state condition node labelled `absent` / `present`.
    pub fn condition(name: impl Into<String>) -> Self {
        Self::new(
            name,
            CONDITION_STATES.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(String, String)>,
}

impl NetworkSpec {
    pub fn new(nodes: Vec<NodeSpec>, edges: Vec<(String, String)>) -> Self {
        Self { nodes, edges }
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        self.edges.iter().any(|(p, c)| p == parent && c == child)
    }

    /// Parents of `child` in the order their edges are declared.
    pub fn parents_of(&self, child: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(_, c)| c == child)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn children_of(&self, parent: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(p, _)| p == parent)
            .map(|(_, c)| c.as_str())
            .collect()
    }
}

/// Conditional probability table `P(child | parents)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CpdRecord", try_from = "CpdRecord")]
pub struct TabularCpd {
    child: String,
    parents: Vec<String>,
    cardinality: usize,
    values: Vec<f64>,
}

/// On-disk form: one row per child state, one column per parent configuration.
#[derive(Serialize, Deserialize)]
struct CpdRecord {
    child: String,
    parents: Vec<String>,
    table: Vec<Vec<f64>>,
}

impl From<TabularCpd> for CpdRecord {
    fn from(cpd: TabularCpd) -> Self {
        let table = cpd.rows();
        CpdRecord {
            child: cpd.child,
            parents: cpd.parents,
            table,
        }
    }
}

impl TryFrom<CpdRecord> for TabularCpd {
    type Error = String;

    fn try_from(rec: CpdRecord) -> Result<Self, String> {
        TabularCpd::from_rows(rec.child, rec.parents, rec.table)
    }
}

impl TabularCpd {
    /// Builds a CPD from a flat row-major table. Only the shape is checked here;
    /// probabilistic validity is reported by [`validate_network`].
    pub fn new(
        child: impl Into<String>,
        parents: Vec<String>,
        cardinality: usize,
        values: Vec<f64>,
    ) -> Result<Self, String> {
        let child = child.into();
        if cardinality == 0 || !values.len().is_multiple_of(cardinality) || values.is_empty() {
            return Err(format!(
                "CPD for `{child}`: {} entries cannot be split into {cardinality} rows",
                values.len()
            ));
        }
        Ok(Self {
            child,
            parents,
            cardinality,
            values,
        })
    }

    pub fn from_rows(
        child: impl Into<String>,
        parents: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, String> {
        let child = child.into();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(format!("CPD for `{child}` has rows of unequal length"));
        }
        let cardinality = rows.len();
        Self::new(
            child,
            parents,
            cardinality,
            rows.into_iter().flatten().collect(),
        )
    }

    /// Uniform table for a node with the given parent cardinalities.
    pub fn uniform(
        child: impl Into<String>,
        parents: Vec<String>,
        cardinality: usize,
        parent_cards: &[usize],
    ) -> Self {
        let configs: usize = parent_cards.iter().product();
        Self {
            child: child.into(),
            parents,
            cardinality,
            values: vec![1.0 / cardinality as f64; cardinality * configs],
        }
    }

    pub fn child(&self) -> &str {
        &self.child
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn n_configs(&self) -> usize {
        self.values.len() / self.cardinality
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prob(&self, child_state: usize, config: usize) -> f64 {
        self.values[child_state * self.n_configs() + config]
    }

    pub fn column(&self, config: usize) -> Vec<f64> {
        (0..self.cardinality)
            .map(|k| self.prob(k, config))
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.n_configs())
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// Linear index of a parent assignment (last parent fastest).
pub fn config_index(states: &[usize], cards: &[usize]) -> usize {
    states.iter().zip(cards).fold(0, |acc, (s, c)| acc * c + s)
}

/// Inverse of [`config_index`].
pub fn config_states(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut states = vec![0; cards.len()];
    for k in (0..cards.len()).rev() {
        states[k] = index % cards[k];
        index /= cards[k];
    }
    states
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateNode {
        node: String,
    },
    TooFewStates {
        node: String,
        cardinality: usize,
    },
    DuplicateState {
        node: String,
        state: String,
    },
    UnknownEndpoint {
        parent: String,
        child: String,
    },
    SelfLoop {
        node: String,
    },
    DuplicateEdge {
        parent: String,
        child: String,
    },
    Cycle {
        node: String,
    },
    MissingCpd {
        node: String,
    },
    DuplicateCpd {
        node: String,
    },
    UnknownCpdNode {
        node: String,
    },
    ParentMismatch {
        node: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    DimensionMismatch {
        node: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    EntryOutOfRange {
        node: String,
        child_state: usize,
        config: Vec<(String, String)>,
        value: f64,
    },
    NotNormalized {
        node: String,
        config: Vec<(String, String)>,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn cfg(config: &[(String, String)]) -> String {
            if config.is_empty() {
                return "(no parents)".into();
            }
            config
                .iter()
                .map(|(p, s)| format!("{p}={s}"))
                .collect::<Vec<_>>()
                .join(", ")
        }
        match self {
            Violation::DuplicateNode { node } => write!(f, "node `{node}` declared more than once"),
            Violation::TooFewStates { node, cardinality } => {
                write!(
                    f,
                    "node `{node}` has {cardinality} states; at least 2 required"
                )
            }
            Violation::DuplicateState { node, state } => {
                write!(f, "node `{node}` repeats state label `{state}`")
            }
            Violation::UnknownEndpoint { parent, child } => {
                write!(f, "edge {parent} -> {child} references an undeclared node")
            }
            Violation::SelfLoop { node } => write!(f, "self-loop on `{node}`"),
            Violation::DuplicateEdge { parent, child } => {
                write!(f, "edge {parent} -> {child} declared more than once")
            }
            Violation::Cycle { node } => write!(f, "graph contains a cycle through `{node}`"),
            Violation::MissingCpd { node } => write!(f, "no CPD for node `{node}`"),
            Violation::DuplicateCpd { node } => write!(f, "more than one CPD for node `{node}`"),
            Violation::UnknownCpdNode { node } => write!(f, "CPD for undeclared node `{node}`"),
            Violation::ParentMismatch {
                node,
                expected,
                found,
            } => write!(
                f,
                "CPD for `{node}` lists parents {found:?}, graph has {expected:?}"
            ),
            Violation::DimensionMismatch {
                node,
                expected,
                found,
            } => write!(
                f,
                "CPD for `{node}` is {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::EntryOutOfRange {
                node,
                child_state,
                config,
                value,
            } => write!(
                f,
                "CPD for `{node}` has entry {value} outside [0, 1] at state {child_state}, {}",
                cfg(config)
            ),
            Violation::NotNormalized { node, config, sum } => {
                write!(f, "CPD for `{node}` sums to {sum} at {}", cfg(config))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Structural checks only (nodes, states, edges, acyclicity).
pub fn validate_structure(spec: &NetworkSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for node in &spec.nodes {
        if !seen.insert(node.name.as_str()) {
            violations.push(Violation::DuplicateNode {
                node: node.name.clone(),
            });
        }
        if node.cardinality() < 2 {
            violations.push(Violation::TooFewStates {
                node: node.name.clone(),
                cardinality: node.cardinality(),
            });
        }
        let mut labels = HashSet::new();
        for s in &node.states {
            if !labels.insert(s.as_str()) {
                violations.push(Violation::DuplicateState {
                    node: node.name.clone(),
                    state: s.clone(),
                });
            }
        }
    }
    let mut edge_set = HashSet::new();
    let mut structurally_sound = true;
    for (p, c) in &spec.edges {
        if !seen.contains(p.as_str()) || !seen.contains(c.as_str()) {
            violations.push(Violation::UnknownEndpoint {
                parent: p.clone(),
                child: c.clone(),
            });
            structurally_sound = false;
            continue;
        }
        if p == c {
            violations.push(Violation::SelfLoop { node: p.clone() });
            structurally_sound = false;
        }
        if !edge_set.insert((p.as_str(), c.as_str())) {
            violations.push(Violation::DuplicateEdge {
                parent: p.clone(),
                child: c.clone(),
            });
        }
    }
    if structurally_sound {
        if let Err(GraphError::Cycle(node)) = topological_order(spec) {
            violations.push(Violation::Cycle { node });
        }
    }
    ValidationReport { violations }
}

/// Full check of a parameterized network. The report is empty exactly when
/// `spec` together with `cpds` forms a valid discrete Bayesian network.
pub fn validate_network(spec: &NetworkSpec, cpds: &[TabularCpd]) -> ValidationReport {
    let mut report = validate_structure(spec);
    let mut by_child: HashMap<&str, &TabularCpd> = HashMap::new();
    for cpd in cpds {
        if spec.node(cpd.child()).is_none() {
            report.violations.push(Violation::UnknownCpdNode {
                node: cpd.child().to_string(),
            });
        } else if by_child.insert(cpd.child(), cpd).is_some() {
            report.violations.push(Violation::DuplicateCpd {
                node: cpd.child().to_string(),
            });
        }
    }
    for node in &spec.nodes {
        let Some(cpd) = by_child.get(node.name.as_str()) else {
            report.violations.push(Violation::MissingCpd {
                node: node.name.clone(),
            });
            continue;
        };
        let expected: Vec<String> = spec
            .parents_of(&node.name)
            .into_iter()
            .map(String::from)
            .collect();
        let mut a = expected.clone();
        let mut b = cpd.parents().to_vec();
        a.sort();
        b.sort();
        if a != b {
            report.violations.push(Violation::ParentMismatch {
                node: node.name.clone(),
                expected,
                found: cpd.parents().to_vec(),
            });
            continue;
        }
        let parent_specs: Vec<&NodeSpec> = cpd
            .parents()
            .iter()
            .map(|p| spec.node(p).expect("parent checked against edges"))
            .collect();
        let parent_cards: Vec<usize> = parent_specs.iter().map(|p| p.cardinality()).collect();
        let configs: usize = parent_cards.iter().product();
        let shape = (cpd.cardinality(), cpd.n_configs());
        if shape != (node.cardinality(), configs) {
            report.violations.push(Violation::DimensionMismatch {
                node: node.name.clone(),
                expected: (node.cardinality(), configs),
                found: shape,
            });
            continue;
        }
        let describe = |config: usize| -> Vec<(String, String)> {
            config_states(config, &parent_cards)
                .into_iter()
                .zip(&parent_specs)
                .map(|(s, p)| (p.name.clone(), p.states[s].clone()))
                .collect()
        };
        for config in 0..configs {
            let mut sum = 0.0;
            for k in 0..node.cardinality() {
                let v = cpd.prob(k, config);
                if !(0.0..=1.0).contains(&v) {
                    report.violations.push(Violation::EntryOutOfRange {
                        node: node.name.clone(),
                        child_state: k,
                        config: describe(config),
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs().is_nan() || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                report.violations.push(Violation::NotNormalized {
                    node: node.name.clone(),
                    config: describe(config),
                    sum,
                });
            }
        }
    }
    report
}

/// Kahn's algorithm; ready nodes are taken in lexicographic name order.
pub fn topological_order(spec: &NetworkSpec) -> Result<Vec<String>, GraphError> {
    let index: HashMap<&str, usize> = spec
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.as_str(), i))
        .collect();
    let n = spec.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    let mut parents = vec![Vec::new(); n];
    for (p, c) in &spec.edges {
        let pi = *index
            .get(p.as_str())
            .ok_or_else(|| GraphError::UnknownNode(p.clone()))?;
        let ci = *index
            .get(c.as_str())
            .ok_or_else(|| GraphError::UnknownNode(c.clone()))?;
        indegree[ci] += 1;
        children[pi].push(ci);
        parents[ci].push(pi);
    }
    let mut ready: BTreeSet<(&str, usize)> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(|i| (spec.nodes[i].name.as_str(), i))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        order.push(spec.nodes[i].name.clone());
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert((spec.nodes[c].name.as_str(), c));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unplaced node has an unplaced parent; walking parents must revisit a node on a cycle.
    let start = (0..n)
        .find(|&i| indegree[i] > 0)
        .expect("unplaced node exists");
    let mut visited = vec![false; n];
    let mut cur = start;
    while !visited[cur] {
        visited[cur] = true;
        cur = *parents[cur]
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("unplaced node has an unplaced parent");
    }
    Err(GraphError::Cycle(spec.nodes[cur].name.clone()))
}

/// A validated, parameterized network with index-based adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    spec: NetworkSpec,
    cpds: Vec<TabularCpd>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl BayesianNetwork {
    pub fn new(spec: NetworkSpec, cpds: Vec<TabularCpd>) -> Result<Self, GraphError> {
        let report = validate_network(&spec, &cpds);
        if !report.is_valid() {
            return Err(GraphError::Invalid(report));
        }
        let mut ordered: Vec<Option<TabularCpd>> = vec![None; spec.nodes.len()];
        for cpd in cpds {
            let i = spec.node_index(cpd.child()).expect("validated");
            ordered[i] = Some(cpd);
        }
        let cpds: Vec<TabularCpd> = ordered.into_iter().map(|c| c.expect("validated")).collect();
        let parents: Vec<Vec<usize>> = cpds
            .iter()
            .map(|c| {
                c.parents()
                    .iter()
                    .map(|p| spec.node_index(p).unwrap())
                    .collect()
            })
            .collect();
        let mut children = vec![Vec::new(); spec.nodes.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let topo = topological_order(&spec)?
            .iter()
            .map(|n| spec.node_index(n).unwrap())
            .collect();
        Ok(Self {
            spec,
            cpds,
            parents,
            children,
            topo,
        })
    }

    /// Network with every CPD uniform; parent order follows edge declaration order.
    pub fn uniform(spec: NetworkSpec) -> Result<Self, GraphError> {
        let report = validate_structure(&spec);
        if !report.is_valid() {
            return Err(GraphError::Invalid(report));
        }
        let cpds = spec
            .nodes
            .iter()
            .map(|n| {
                let parents: Vec<String> = spec
                    .parents_of(&n.name)
                    .into_iter()
                    .map(String::from)
                    .collect();
                let cards: Vec<usize> = parents
                    .iter()
                    .map(|p| spec.node(p).unwrap().cardinality())
                    .collect();
                TabularCpd::uniform(n.name.clone(), parents, n.cardinality(), &cards)
            })
            .collect();
        Self::new(spec, cpds)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &NodeSpec {
        &self.spec.nodes[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.spec.nodes[i].name
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.spec.nodes[i].cardinality()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.spec
            .node_index(name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    /// Resolves a state label of node `i`.
    pub fn state_of(&self, i: usize, label: &str) -> Result<usize, GraphError> {
        self.node(i)
            .state_index(label)
            .ok_or_else(|| GraphError::UnknownState {
                node: self.name(i).to_string(),
                state: label.to_string(),
            })
    }

    pub fn cpd(&self, i: usize) -> &TabularCpd {
        &self.cpds[i]
    }

    pub fn cpds(&self) -> &[TabularCpd] {
        &self.cpds
    }

    /// Parent indices in CPD order.
    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn topological(&self) -> &[usize] {
        &self.topo
    }

    /// The CPD of node `i` as a factor over `[i, parents..]`.
    pub fn factor(&self, i: usize) -> Factor {
        let mut vars = vec![i];
        vars.extend_from_slice(&self.parents[i]);
        let cards = vars.iter().map(|&v| self.cardinality(v)).collect();
        Factor::new(vars, cards, self.cpds[i].values().to_vec()).expect("validated CPD")
    }

    /// Probability of `child_state` for node `i` given a full assignment vector.
    pub fn local_prob(&self, i: usize, assignment: &[usize]) -> f64 {
        let cpd = &self.cpds[i];
        let config = self.parents[i]
            .iter()
            .fold(0, |acc, &p| acc * self.cardinality(p) + assignment[p]);
        cpd.prob(assignment[i], config)
    }

    pub fn into_parts(self) -> (NetworkSpec, Vec<TabularCpd>) {
        (self.spec, self.cpds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> NetworkSpec {
        NetworkSpec::new(
            vec![
                NodeSpec::ordinal("A", 2),
                NodeSpec::ordinal("B", 2),
                NodeSpec::ordinal("C", 2),
            ],
            vec![("A".into(), "B".into()), ("B".into(), "C".into())],
        )
    }

    fn chain_cpds() -> Vec<TabularCpd> {
        vec![
            TabularCpd::from_rows("A", vec![], vec![vec![0.7], vec![0.3]]).unwrap(),
            TabularCpd::from_rows("B", vec!["A".into()], vec![vec![0.8, 0.2], vec![0.2, 0.8]])
                .unwrap(),
            TabularCpd::from_rows("C", vec!["B".into()], vec![vec![0.9, 0.1], vec![0.1, 0.9]])
                .unwrap(),
        ]
    }

    #[test]
    fn valid_chain_has_empty_report() {
        assert!(validate_network(&chain(), &chain_cpds()).is_valid());
        assert!(BayesianNetwork::new(chain(), chain_cpds()).is_ok());
    }

    #[test]
    fn two_cycle_is_reported() {
        let spec = NetworkSpec::new(
            vec![NodeSpec::ordinal("A", 2), NodeSpec::ordinal("B", 2)],
            vec![("A".into(), "B".into()), ("B".into(), "A".into())],
        );
        let report = validate_structure(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Cycle { .. })));
        match topological_order(&spec) {
            Err(GraphError::Cycle(n)) => assert!(n == "A" || n == "B"),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn cycle_error_names_a_node_on_the_cycle() {
        // D hangs below the cycle B -> C -> B and must not be blamed.
        let spec = NetworkSpec::new(
            ["A", "B", "C", "D"]
                .iter()
                .map(|n| NodeSpec::ordinal(*n, 2))
                .collect(),
            vec![
                ("A".into(), "B".into()),
                ("B".into(), "C".into()),
                ("C".into(), "B".into()),
                ("C".into(), "D".into()),
            ],
        );
        match topological_order(&spec) {
            Err(GraphError::Cycle(n)) => assert!(n == "B" || n == "C", "{n}"),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn unnormalized_column_names_node_and_configuration() {
        let mut cpds = chain_cpds();
        cpds[2] =
            TabularCpd::from_rows("C", vec!["B".into()], vec![vec![0.9, 0.1], vec![0.0, 0.9]])
                .unwrap();
        let report = validate_network(&chain(), &cpds);
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::NotNormalized { node, config, sum } => {
                assert_eq!(node, "C");
                assert_eq!(config, &vec![("B".to_string(), "0".to_string())]);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            v => panic!("unexpected violation {v:?}"),
        }
    }

    #[test]
    fn structural_problems_are_all_listed() {
        let spec = NetworkSpec::new(
            vec![
                NodeSpec::ordinal("A", 2),
                NodeSpec::ordinal("A", 2),
                NodeSpec::new("B", vec!["x".into(), "x".into()]),
                NodeSpec::ordinal("C", 1),
            ],
            vec![
                ("A".into(), "Z".into()),
                ("B".into(), "B".into()),
                ("A".into(), "B".into()),
                ("A".into(), "B".into()),
            ],
        );
        let report = validate_structure(&spec);
        let kinds: Vec<_> = report
            .violations
            .iter()
            .map(std::mem::discriminant)
            .collect();
        for expected in [
            Violation::DuplicateNode {
                node: String::new(),
            },
            Violation::DuplicateState {
                node: String::new(),
                state: String::new(),
            },
            Violation::TooFewStates {
                node: String::new(),
                cardinality: 0,
            },
            Violation::UnknownEndpoint {
                parent: String::new(),
                child: String::new(),
            },
            Violation::SelfLoop {
                node: String::new(),
            },
            Violation::DuplicateEdge {
                parent: String::new(),
                child: String::new(),
            },
        ] {
            assert!(
                kinds.contains(&std::mem::discriminant(&expected)),
                "{expected:?} missing"
            );
        }
    }

    #[test]
    fn missing_and_misshapen_cpds() {
        let mut cpds = chain_cpds();
        cpds.remove(0);
        cpds[0] = TabularCpd::from_rows("B", vec!["A".into()], vec![vec![0.5], vec![0.5]]).unwrap();
        let report = validate_network(&chain(), &cpds);
        assert!(report
            .violations
            .contains(&Violation::MissingCpd { node: "A".into() }));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DimensionMismatch { node, .. } if node == "B")));
    }

    #[test]
    fn chain_topological_order() {
        assert_eq!(topological_order(&chain()).unwrap(), vec!["A", "B", "C"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let spec = NetworkSpec::new(
            vec![
                NodeSpec::ordinal("z", 2),
                NodeSpec::ordinal("b", 2),
                NodeSpec::ordinal("a", 2),
            ],
            vec![("z".into(), "a".into())],
        );
        assert_eq!(topological_order(&spec).unwrap(), vec!["b", "z", "a"]);
    }

    #[test]
    fn cpd_factor_marginalizes_to_one_per_column() {
        let net = BayesianNetwork::new(chain(), chain_cpds()).unwrap();
        let f = net.factor(1).reduce(0, 1).unwrap();
        assert!((f.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn config_index_round_trip() {
        let cards = [2, 4, 3];
        for i in 0..24 {
            assert_eq!(config_index(&config_states(i, &cards), &cards), i);
        }
    }
}
