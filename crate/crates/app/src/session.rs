//! Interactive sessions: evidence and interventions changed one action at a
//! time, with an append-only history that replays to the same state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use symnet_core::inference::{EvidenceMap, InterventionSet};

use crate::assessment::{raw_conditions, Model, ModelError, StateRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    /// Observe `node` in `state`; a null state clears the observation.
    SetEvidence {
        node: String,
        state: Option<StateRef>,
    },
    /// Add (`isolate: true`) or remove a do-isolation of `node`.
    Intervene { node: String, isolate: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: Action,
    /// Uncalibrated condition probabilities after the action.
    pub conditions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub evidence: EvidenceMap,
    pub interventions: InterventionSet,
    pub history: Vec<HistoryEntry>,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            evidence: EvidenceMap::new(),
            interventions: InterventionSet::new(),
            history: Vec::new(),
        }
    }

    /// Applies `action` if the resulting state is valid and consistent;
    /// otherwise the session is left untouched.
    pub fn apply(&mut self, model: &Model, action: Action) -> Result<&HistoryEntry, ModelError> {
        let mut evidence = self.evidence.clone();
        let mut interventions = self.interventions.clone();
        match &action {
            Action::SetEvidence { node, state } => {
                model.check_node(node)?;
                match state {
                    Some(s) => {
                        evidence.insert(node.clone(), model.resolve_state(node, s)?);
                    }
                    None => {
                        evidence.remove(node);
                    }
                }
            }
            Action::Intervene { node, isolate } => {
                model.check_node(node)?;
                if *isolate {
                    interventions.isolate(node.clone());
                } else {
                    interventions.remove(node);
                }
            }
        }
        let conditions = raw_conditions(model, &evidence, &interventions)?;
        self.evidence = evidence;
        self.interventions = interventions;
        self.history.push(HistoryEntry { action, conditions });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Rebuilds a session by applying `history`'s actions to a fresh state.
    pub fn replay(
        model: &Model,
        id: impl Into<String>,
        history: &[HistoryEntry],
    ) -> Result<Self, ModelError> {
        let mut s = Session::new(id);
        for entry in history {
            s.apply(model, entry.action.clone())?;
        }
        Ok(s)
    }
}
