use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BayesianNetwork, GraphError, NetworkSpec, NodeSpec, TabularCpd};

/// JSON network file: `nodes`, `edges`, `cpds` in that order. A structure-only
/// file simply has an empty (or absent) `cpds` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub cpds: Vec<TabularCpd>,
}

impl NetworkFile {
    pub fn from_spec(spec: &NetworkSpec) -> Self {
        Self {
            nodes: spec.nodes.clone(),
            edges: spec.edges.clone(),
            cpds: Vec::new(),
        }
    }

    pub fn from_network(net: &BayesianNetwork) -> Self {
        Self {
            nodes: net.spec().nodes.clone(),
            edges: net.spec().edges.clone(),
            cpds: net.cpds().to_vec(),
        }
    }

    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec::new(self.nodes.clone(), self.edges.clone())
    }

    pub fn into_network(self) -> Result<BayesianNetwork, GraphError> {
        BayesianNetwork::new(NetworkSpec::new(self.nodes, self.edges), self.cpds)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}
