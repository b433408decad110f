//! Fixed topology of the depression/anxiety symptom network and the registry
//! of surrogate observation nodes attached to each symptom.

use serde::{Deserialize, Serialize};

use super::{NetworkSpec, NodeSpec};

pub const DEPRESSION: &str = "Depression";
pub const ANXIETY: &str = "Anxiety";

/// Number of ordinal severity levels per symptom (item scores 0..=3).
pub const SEVERITY_LEVELS: usize = 4;
/// Quartile bins per surrogate observation node.
pub const QUARTILES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "reading-MM")]
    ReadingMm,
    #[serde(rename = "mood-audio")]
    MoodAudio,
    #[serde(rename = "mood-linguistic")]
    MoodLinguistic,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::ReadingMm, Family::MoodAudio, Family::MoodLinguistic];

    pub fn label(self) -> &'static str {
        match self {
            Family::ReadingMm => "reading-MM",
            Family::MoodAudio => "mood-audio",
            Family::MoodLinguistic => "mood-linguistic",
        }
    }

    pub fn parse(label: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub name: String,
    /// Symptom node names, in questionnaire item order.
    pub symptoms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub name: String,
    pub symptom: String,
    pub family: Family,
    /// Discrimination of the surrogate against its symptom's binarized state.
    pub target_auc: f64,
}

/// Roles of the nodes in a condition/symptom/surrogate network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub conditions: Vec<ConditionSpec>,
    pub inter_symptom_edges: Vec<(String, String)>,
    pub surrogates: Vec<SurrogateSpec>,
}

impl Layout {
    pub fn condition_names(&self) -> Vec<&str> {
        self.conditions.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn symptoms(&self) -> impl Iterator<Item = &str> {
        self.conditions
            .iter()
            .flat_map(|c| c.symptoms.iter().map(String::as_str))
    }

    pub fn condition_of(&self, symptom: &str) -> Option<&str> {
        self.conditions
            .iter()
            .find(|c| c.symptoms.iter().any(|s| s == symptom))
            .map(|c| c.name.as_str())
    }

    pub fn surrogates_of<'a>(
        &'a self,
        symptom: &'a str,
    ) -> impl Iterator<Item = &'a SurrogateSpec> + 'a {
        self.surrogates.iter().filter(move |s| s.symptom == symptom)
    }

    pub fn surrogate(&self, name: &str) -> Option<&SurrogateSpec> {
        self.surrogates.iter().find(|s| s.name == name)
    }

    /// Builds the network structure. Nodes are ordered conditions, symptoms,
    /// surrogates; each symptom's parents are its condition followed by its
    /// inter-symptom parents in declaration order.
    pub fn network_spec(&self, condition_edge: bool) -> NetworkSpec {
        let mut nodes: Vec<NodeSpec> = self
            .conditions
            .iter()
            .map(|c| NodeSpec::condition(c.name.clone()))
            .collect();
        nodes.extend(
            self.symptoms()
                .map(|s| NodeSpec::ordinal(s, SEVERITY_LEVELS)),
        );
        nodes.extend(
            self.surrogates
                .iter()
                .map(|s| NodeSpec::ordinal(s.name.clone(), QUARTILES)),
        );

        let mut edges = Vec::new();
        if condition_edge {
            for pair in self.conditions.windows(2) {
                edges.push((pair[0].name.clone(), pair[1].name.clone()));
            }
        }
        for c in &self.conditions {
            for s in &c.symptoms {
                edges.push((c.name.clone(), s.clone()));
            }
        }
        edges.extend(self.inter_symptom_edges.iter().cloned());
        for s in &self.surrogates {
            edges.push((s.symptom.clone(), s.name.clone()));
        }
        NetworkSpec::new(nodes, edges)
    }
}

const DEPRESSION_SYMPTOMS: [&str; 8] = [
    "Anhedonia",
    "LowMood",
    "Sleep",
    "LowEnergy",
    "Appetite",
    "Worthlessness",
    "Concentration",
    "Psychomotor",
];

const ANXIETY_SYMPTOMS: [&str; 7] = [
    "Nervousness",
    "UncontrollableWorry",
    "ExcessiveWorry",
    "TroubleRelaxing",
    "Restlessness",
    "Irritability",
    "Dread",
];

const INTER_SYMPTOM_EDGES: [(&str, &str); 6] = [
    ("LowEnergy", "Anhedonia"),
    ("Worthlessness", "LowMood"),
    ("Appetite", "LowEnergy"),
    ("TroubleRelaxing", "Restlessness"),
    ("Psychomotor", "Restlessness"),
    ("TroubleRelaxing", "Concentration"),
];

use Family::{MoodAudio as MA, MoodLinguistic as ML, ReadingMm as RM};

/// Retained surrogate inputs and their held-out discrimination.
const SURROGATES: [(&str, Family, f64); 31] = [
    ("Anhedonia", MA, 0.674),
    ("Anhedonia", ML, 0.715),
    ("LowMood", MA, 0.712),
    ("LowMood", ML, 0.779),
    ("Sleep", RM, 0.620),
    ("Sleep", MA, 0.662),
    ("Sleep", ML, 0.684),
    ("LowEnergy", RM, 0.634),
    ("LowEnergy", MA, 0.692),
    ("LowEnergy", ML, 0.724),
    ("Appetite", RM, 0.620),
    ("Worthlessness", MA, 0.691),
    ("Worthlessness", ML, 0.746),
    ("Concentration", RM, 0.601),
    ("Concentration", MA, 0.649),
    ("Psychomotor", RM, 0.638),
    ("Psychomotor", MA, 0.680),
    ("Nervousness", MA, 0.709),
    ("Nervousness", ML, 0.742),
    ("UncontrollableWorry", MA, 0.695),
    ("UncontrollableWorry", ML, 0.733),
    ("ExcessiveWorry", MA, 0.692),
    ("ExcessiveWorry", ML, 0.735),
    ("TroubleRelaxing", RM, 0.607),
    ("TroubleRelaxing", ML, 0.714),
    ("Restlessness", RM, 0.624),
    ("Restlessness", ML, 0.652),
    ("Irritability", RM, 0.623),
    ("Irritability", MA, 0.677),
    ("Dread", MA, 0.654),
    ("Dread", ML, 0.682),
];

/// `LowEnergy` -> `low-energy`.
fn kebab(name: &str) -> String {
    let mut out = String::new();
    for (i, ch) in name.chars().enumerate() {
        if ch.is_uppercase() {
            if i > 0 {
                out.push('-');
            }
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    out
}

pub fn surrogate_node_name(symptom: &str, family: Family) -> String {
    format!("{}-{}", kebab(symptom), family.label())
}

pub fn standard_layout() -> Layout {
    Layout {
        conditions: vec![
            ConditionSpec {
                name: DEPRESSION.into(),
                symptoms: DEPRESSION_SYMPTOMS.iter().map(|s| s.to_string()).collect(),
            },
            ConditionSpec {
                name: ANXIETY.into(),
                symptoms: ANXIETY_SYMPTOMS.iter().map(|s| s.to_string()).collect(),
            },
        ],
        inter_symptom_edges: INTER_SYMPTOM_EDGES
            .iter()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect(),
        surrogates: SURROGATES
            .iter()
            .map(|&(symptom, family, auc)| SurrogateSpec {
                name: surrogate_node_name(symptom, family),
                symptom: symptom.to_string(),
                family,
                target_auc: auc,
            })
            .collect(),
    }
}

/// The symptom network with the optional `Depression -> Anxiety` edge.
pub fn standard_network(condition_edge: bool) -> NetworkSpec {
    standard_layout().network_spec(condition_edge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{topological_order, validate_structure};

    #[test]
    fn node_count_matches_surrogate_registry() {
        let spec = standard_network(true);
        assert_eq!(spec.nodes.len(), 2 + 15 + 31);
        assert_eq!(standard_layout().surrogates.len(), 31);
    }

    #[test]
    fn retained_edges_present() {
        let spec = standard_network(true);
        assert!(spec.has_edge("TroubleRelaxing", "Concentration"));
        assert!(spec.has_edge("LowEnergy", "Anhedonia"));
        assert!(spec.has_edge(DEPRESSION, ANXIETY));
        assert!(!standard_network(false).has_edge(DEPRESSION, ANXIETY));
        assert_eq!(
            spec.children_of("Sleep"),
            vec![
                "sleep-reading-MM",
                "sleep-mood-audio",
                "sleep-mood-linguistic"
            ]
        );
        assert_eq!(
            spec.children_of("Appetite"),
            vec!["LowEnergy", "appetite-reading-MM"]
        );
        assert_eq!(
            spec.parents_of("Restlessness"),
            vec![ANXIETY, "TroubleRelaxing", "Psychomotor"]
        );
    }

    #[test]
    fn structure_is_valid_and_conditions_come_first() {
        let spec = standard_network(true);
        assert!(validate_structure(&spec).is_valid());
        let order = topological_order(&spec).unwrap();
        let pos = |n: &str| order.iter().position(|x| x == n).unwrap();
        assert!(pos(DEPRESSION) < pos("Anhedonia"));
        assert!(pos("Appetite") < pos("LowEnergy"));
        assert!(pos("LowEnergy") < pos("Anhedonia"));
    }

    #[test]
    fn every_symptom_has_a_paralinguistic_input() {
        let layout = standard_layout();
        for s in layout.symptoms() {
            assert!(
                layout
                    .surrogates_of(s)
                    .any(|x| x.family != Family::MoodLinguistic),
                "{s}"
            );
        }
    }
}
