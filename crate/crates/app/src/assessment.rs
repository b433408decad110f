//! Loaded model artifacts and the full posterior read-out shared by the CLI
//! and the HTTP service.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use symnet_core::graph::{standard_layout, BayesianNetwork, GraphError, Layout, NetworkFile};
use symnet_core::inference::{
    effective_evidence, query_conditions, query_symptoms, severity_from_posteriors,
    symptom_contributions, EvidenceMap, InferenceError, InterventionSet, SeverityReport,
};
use symnet_core::pipeline::{CalibratorSet, PipelineError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("layout node `{0}` is not in the network")]
    LayoutMismatch(String),
    #[error("no calibrator for condition `{0}`")]
    MissingCalibrator(String),
    #[error("reading layout: {0}")]
    Layout(String),
}

pub fn read_layout(path: Option<&Path>) -> Result<Layout, ModelError> {
    match path {
        None => Ok(standard_layout()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ModelError::Layout(e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| ModelError::Layout(e.to_string()))
        }
    }
}

/// A fitted network, the node roles it is read with, and optional calibrators.
#[derive(Debug, Clone)]
pub struct Model {
    pub network: BayesianNetwork,
    pub layout: Layout,
    pub calibrators: Option<CalibratorSet>,
}

impl Model {
    pub fn new(
        network: BayesianNetwork,
        layout: Layout,
        calibrators: Option<CalibratorSet>,
    ) -> Result<Self, ModelError> {
        let names = layout
            .condition_names()
            .into_iter()
            .map(str::to_string)
            .chain(layout.symptoms().map(str::to_string))
            .chain(layout.surrogates.iter().map(|s| s.name.clone()));
        for name in names {
            if network.index_of(&name).is_err() {
                return Err(ModelError::LayoutMismatch(name));
            }
        }
        if let Some(set) = &calibrators {
            for c in layout.condition_names() {
                if !set.conditions.contains_key(c) {
                    return Err(ModelError::MissingCalibrator(c.to_string()));
                }
            }
        }
        Ok(Self {
            network,
            layout,
            calibrators,
        })
    }

    pub fn load(
        network: &Path,
        calibrators: Option<&Path>,
        layout: Option<&Path>,
    ) -> Result<Self, ModelError> {
        let net = NetworkFile::read(network)?.into_network()?;
        let cal = calibrators.map(CalibratorSet::read).transpose()?;
        Self::new(net, read_layout(layout)?, cal)
    }

    /// Resolves a state given by label or index.
    pub fn resolve_state(&self, node: &str, state: &StateRef) -> Result<usize, InferenceError> {
        let i = self
            .network
            .index_of(node)
            .map_err(|_| InferenceError::UnknownNode(node.to_string()))?;
        let card = self.network.cardinality(i);
        let s = match state {
            StateRef::Index(k) => *k,
            StateRef::Label(label) => match self.network.state_of(i, label) {
                Ok(k) => k,
                Err(_) => {
                    return Err(InferenceError::StateOutOfRange {
                        node: node.to_string(),
                        state: label.parse().unwrap_or(usize::MAX),
                        cardinality: card,
                    })
                }
            },
        };
        if s >= card {
            return Err(InferenceError::StateOutOfRange {
                node: node.to_string(),
                state: s,
                cardinality: card,
            });
        }
        Ok(s)
    }

    pub fn check_node(&self, node: &str) -> Result<usize, InferenceError> {
        self.network
            .index_of(node)
            .map_err(|_| InferenceError::UnknownNode(node.to_string()))
    }
}

/// A state by index or by its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRef {
    Index(usize),
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionProbability {
    pub raw: f64,
    pub calibrated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub conditions: BTreeMap<String, ConditionProbability>,
    pub symptoms: BTreeMap<String, Vec<f64>>,
    pub expected_severity: SeverityReport,
    pub contributions: BTreeMap<String, BTreeMap<String, f64>>,
    pub evidence: EvidenceMap,
    /// Evidence actually conditioned on after interventions.
    pub effective_evidence: EvidenceMap,
    pub interventions: InterventionSet,
}

pub fn raw_conditions(
    model: &Model,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> Result<BTreeMap<String, f64>, ModelError> {
    Ok(query_conditions(&model.network, &model.layout, evidence, interventions)?.0)
}

pub fn assess(
    model: &Model,
    evidence: &EvidenceMap,
    interventions: &InterventionSet,
) -> Result<Assessment, ModelError> {
    let raw = raw_conditions(model, evidence, interventions)?;
    let mut conditions = BTreeMap::new();
    for (c, p) in raw {
        let calibrated = match &model.calibrators {
            Some(set) => Some(set.calibrate(&c, p)?),
            None => None,
        };
        conditions.insert(c, ConditionProbability { raw: p, calibrated });
    }
    let symptoms = query_symptoms(&model.network, &model.layout, evidence, interventions)?;
    let expected_severity = severity_from_posteriors(&model.layout, &symptoms);
    let contributions =
        symptom_contributions(&model.network, &model.layout, evidence, interventions)?;
    Ok(Assessment {
        conditions,
        symptoms,
        expected_severity,
        contributions,
        evidence: evidence.clone(),
        effective_evidence: effective_evidence(&model.network, evidence, interventions),
        interventions: interventions.clone(),
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use symnet_core::estimation::EssConfig;
    use symnet_core::exec::Execution;
    use symnet_core::synthgen::{sample_cohort, GeneratorConfig, Split};
    use symnet_core::workflow::{fit_calibrators, predict_batch, train, PredictOptions};

    /// A small fitted model with calibrators.
    pub fn small_model() -> Model {
        let layout = standard_layout();
        let config = GeneratorConfig {
            n: 1500,
            ..GeneratorConfig::for_layout(&layout)
        };
        let cohort = sample_cohort(&config, &layout, Execution::Sequential).unwrap();
        let (net, binner) = train(
            &cohort.split(Split::Development),
            &layout,
            &layout.network_spec(true),
            EssConfig::default(),
            Execution::Sequential,
        )
        .unwrap();
        let mut cal = cohort.split(Split::Calibration);
        binner.discretize(&mut cal).unwrap();
        let preds = predict_batch(
            &net,
            &layout,
            &cal,
            &PredictOptions::default(),
            Execution::Sequential,
        )
        .unwrap();
        let set = fit_calibrators(&preds, &cal, &layout, 10, 1, Execution::Sequential).unwrap();
        Model::new(net, layout, Some(set)).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_references_resolve_by_label_or_index() {
        let model = fixtures::small_model();
        assert_eq!(
            model
                .resolve_state("Sleep", &StateRef::Label("2".into()))
                .unwrap(),
            2
        );
        assert_eq!(
            model
                .resolve_state("Depression", &StateRef::Label("present".into()))
                .unwrap(),
            1
        );
        assert_eq!(
            model.resolve_state("Sleep", &StateRef::Index(3)).unwrap(),
            3
        );
        assert!(model.resolve_state("Sleep", &StateRef::Index(4)).is_err());
        assert!(model
            .resolve_state("Sleep", &StateRef::Label("high".into()))
            .is_err());
        assert!(matches!(
            model.resolve_state("Nope", &StateRef::Index(0)),
            Err(InferenceError::UnknownNode(n)) if n == "Nope"
        ));
    }

    #[test]
    fn assessment_is_normalized_and_calibrated() {
        let model = fixtures::small_model();
        let a = assess(&model, &EvidenceMap::new(), &InterventionSet::new()).unwrap();
        assert_eq!(a.conditions.len(), 2);
        for p in a.conditions.values() {
            assert!((0.0..=1.0).contains(&p.raw));
            assert!(p.calibrated.is_some_and(|c| (0.0..=1.0).contains(&c)));
        }
        for d in a.symptoms.values() {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(a
            .contributions
            .values()
            .flat_map(|m| m.values())
            .all(|&x| x == 0.0));
    }

    #[test]
    fn layout_must_match_network() {
        let model = fixtures::small_model();
        let mut layout = model.layout.clone();
        layout.conditions[0].symptoms.push("Extra".into());
        assert!(matches!(
            Model::new(model.network.clone(), layout, None),
            Err(ModelError::LayoutMismatch(n)) if n == "Extra"
        ));
    }
}
