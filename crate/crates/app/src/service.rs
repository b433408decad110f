//! HTTP session service.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use symnet_core::graph::{Family, NodeSpec};
use symnet_core::inference::InferenceError;

use crate::assessment::{assess, Assessment, Model, ModelError, StateRef};
use crate::session::{Action, Session};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error("invalid request body: {0}")]
    Body(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        let (status, code, node) = match &self {
            ApiError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session", None),
            ApiError::Body(_) => (StatusCode::BAD_REQUEST, "invalid_body", None),
            ApiError::Model(ModelError::Inference(e)) => match e {
                InferenceError::UnknownNode(n) => (
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "unknown_node",
                    Some(n.clone()),
                ),
                InferenceError::StateOutOfRange { node, .. } => (
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "invalid_state",
                    Some(node.clone()),
                ),
                InferenceError::InconsistentEvidence => {
                    (StatusCode::CONFLICT, "inconsistent_evidence", None)
                }
                _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_query", None),
            },
            ApiError::Model(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", None),
        };
        let mut body = json!({ "error": code, "message": message });
        if let Some(n) = node {
            body["node"] = json!(n);
        }
        (status, Json(body)).into_response()
    }
}

pub struct AppState {
    model: Arc<Model>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(model: Model) -> Self {
        Self {
            model: Arc::new(model),
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }
}

type Shared = Arc<AppState>;

pub fn router(model: Model) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/network", get(network))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/evidence", put(put_evidence))
        .route("/sessions/{id}/interventions", put(put_interventions))
        .route("/sessions/{id}/posteriors", get(get_posteriors))
        .with_state(Arc::new(AppState::new(model)))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Debug, Serialize)]
struct NodeView {
    name: String,
    states: Vec<String>,
    role: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    symptom: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    condition: Option<String>,
}

#[derive(Debug, Serialize)]
struct NetworkView {
    nodes: Vec<NodeView>,
    edges: Vec<(String, String)>,
}

async fn network(State(state): State<Shared>) -> Json<NetworkView> {
    let layout = &state.model.layout;
    let nodes = state
        .model
        .network
        .spec()
        .nodes
        .iter()
        .map(|n: &NodeSpec| {
            let mut view = NodeView {
                name: n.name.clone(),
                states: n.states.clone(),
                role: "other",
                symptom: None,
                family: None,
                condition: None,
            };
            if layout.conditions.iter().any(|c| c.name == n.name) {
                view.role = "condition";
            } else if let Some(c) = layout.condition_of(&n.name) {
                view.role = "symptom";
                view.condition = Some(c.to_string());
            } else if let Some(s) = layout.surrogate(&n.name) {
                view.role = "surrogate";
                view.symptom = Some(s.symptom.clone());
                view.family = Some(s.family);
            }
            view
        })
        .collect();
    Json(NetworkView {
        nodes,
        edges: state.model.network.spec().edges.clone(),
    })
}

async fn create_session(State(state): State<Shared>) -> (StatusCode, Json<Session>) {
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session::new(id.clone());
    state
        .sessions
        .write()
        .expect("session map lock")
        .insert(id, Arc::new(Mutex::new(session.clone())));
    (StatusCode::CREATED, Json(session))
}

async fn get_session(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Session>, ApiError> {
    let s = state.session(&id)?;
    let s = s.lock().expect("session lock").clone();
    Ok(Json(s))
}

async fn delete_session(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    match state
        .sessions
        .write()
        .expect("session map lock")
        .remove(&id)
    {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::UnknownSession(id)),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// `{"node": "Sleep", "state": 2}`; a null or missing state clears evidence.
#[derive(Debug, Deserialize)]
struct EvidenceUpdate {
    node: String,
    #[serde(default)]
    state: Option<StateRef>,
}

/// `{"node": "Sleep", "isolate": true}`.
#[derive(Debug, Deserialize)]
struct InterventionUpdate {
    node: String,
    #[serde(default = "yes")]
    isolate: bool,
}

fn yes() -> bool {
    true
}

/// Applies all actions or none.
fn mutate(state: &AppState, id: &str, actions: Vec<Action>) -> Result<Assessment, ApiError> {
    let session = state.session(id)?;
    let mut guard = session.lock().expect("session lock");
    let mut next = guard.clone();
    for a in actions {
        next.apply(&state.model, a)?;
    }
    let out = assess(&state.model, &next.evidence, &next.interventions)?;
    *guard = next;
    Ok(out)
}

async fn put_evidence(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<OneOrMany<EvidenceUpdate>>, JsonRejection>,
) -> Result<Json<Assessment>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::Body(e.body_text()))?;
    let actions = body
        .into_vec()
        .into_iter()
        .map(|u| Action::SetEvidence {
            node: u.node,
            state: u.state,
        })
        .collect();
    Ok(Json(mutate(&state, &id, actions)?))
}

async fn put_interventions(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<OneOrMany<InterventionUpdate>>, JsonRejection>,
) -> Result<Json<Assessment>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::Body(e.body_text()))?;
    let actions = body
        .into_vec()
        .into_iter()
        .map(|u| Action::Intervene {
            node: u.node,
            isolate: u.isolate,
        })
        .collect();
    Ok(Json(mutate(&state, &id, actions)?))
}

async fn get_posteriors(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Assessment>, ApiError> {
    let session = state.session(&id)?;
    let (evidence, interventions) = {
        let s = session.lock().expect("session lock");
        (s.evidence.clone(), s.interventions.clone())
    };
    Ok(Json(assess(&state.model, &evidence, &interventions)?))
}
