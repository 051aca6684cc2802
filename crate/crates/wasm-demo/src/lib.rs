//! Browser bindings: embed a request, verify an embedding and ask a what-if
//! question, all on JSON strings.
//!
//! The plain functions in [`api`] do the work and are tested natively; the
//! exported wrappers only turn their errors into JavaScript exceptions.

use wasm_bindgen::prelude::*;

pub mod api {
    use std::collections::BTreeSet;

    use cloudnet_core::engine::doc::{EmbeddingDoc, StateDoc};
    use cloudnet_core::engine::{
        embed as embed_request, verify_embedding, whatif_subset, CheckScope, EmbedOutcome, SubstrateState,
    };
    use cloudnet_core::network::doc::RequestFileDoc;
    use cloudnet_core::network::{ElementId, ObjectiveConfig, ResourceClass};
    use cloudnet_core::solver::SolverConfig;
    use serde::Serialize;
    use serde_json::json;

    pub const SAMPLE_STATE: &str = include_str!("../../core/data/state.json");
    pub const SAMPLE_REQUEST: &str = include_str!("../../core/data/request.json");

    fn state(text: &str) -> Result<SubstrateState, String> {
        StateDoc::parse(text)
            .and_then(|d| d.to_state())
            .map_err(|e| format!("state: {e}"))
    }

    fn objective(name: &str, state: &SubstrateState) -> Result<ObjectiveConfig, String> {
        match name {
            "resource" => Ok(ObjectiveConfig::ResourceMin),
            "load" => Ok(ObjectiveConfig::LoadBalance {
                c: state
                    .substrate
                    .resources
                    .of_class(ResourceClass::Substrate)
                    .map(|r| r.load_weight)
                    .sum(),
            }),
            other => Err(format!("unknown objective `{other}`")),
        }
    }

    fn pretty<T: Serialize>(v: &T) -> Result<String, String> {
        serde_json::to_string_pretty(v).map_err(|e| e.to_string())
    }

    /// `{accepted, embedding | rejection, state, nodes}`; `state` is the
    /// input state with the embedding committed.
    pub fn embed(state_json: &str, request_json: &str, objective_name: &str) -> Result<String, String> {
        let mut st = state(state_json)?;
        let file: RequestFileDoc = serde_json::from_str(request_json).map_err(|e| format!("request: {e}"))?;
        let request = file.request.to_request().map_err(|e| format!("request: {e}"))?;
        let policies = file.policies.to_policies(&st.substrate);
        let objective = objective(objective_name, &st)?;
        let report = embed_request(&st, &request, &policies, objective, &SolverConfig::deterministic())
            .map_err(|e| e.to_string())?;
        let nodes = report.stats.nodes;
        match report.outcome {
            EmbedOutcome::Accepted(e) => {
                let doc = EmbeddingDoc {
                    request: file.request,
                    policies: file.policies,
                    embedding: e.clone(),
                };
                st.commit(request, policies, e).map_err(|e| e.to_string())?;
                pretty(&json!({
                    "accepted": true,
                    "embedding": doc,
                    "state": StateDoc::from_state(&st),
                    "nodes": nodes,
                }))
            }
            EmbedOutcome::Rejected(r) => pretty(&json!({
                "accepted": false,
                "rejection": r,
                "state": StateDoc::from_state(&st),
                "nodes": nodes,
            })),
        }
    }

    /// `{valid, violations}` for an embedding document against a state.
    pub fn verify(state_json: &str, embedding_json: &str) -> Result<String, String> {
        let st = state(state_json)?;
        let doc = EmbeddingDoc::parse(embedding_json).map_err(|e| format!("embedding: {e}"))?;
        let request = doc.request.to_request().map_err(|e| format!("embedding: {e}"))?;
        let policies = doc.policies.to_policies(&st.substrate);
        let excluding = st.get(&request.id).map(|_| request.id.as_str());
        let problem = st
            .problem_for(&request, &policies, ObjectiveConfig::ResourceMin, excluding)
            .map_err(|e| e.to_string())?;
        let report = verify_embedding(&problem, &doc.embedding, CheckScope::Placement, 1e-6);
        pretty(&json!({"valid": report.is_clean(), "violations": report.violations}))
    }

    /// What-if for a whitespace or comma separated list of substrate ids.
    pub fn whatif(state_json: &str, subset: &str) -> Result<String, String> {
        let st = state(state_json)?;
        let subset: BTreeSet<ElementId> = subset
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(ElementId::new)
            .collect();
        let w = whatif_subset(&st, &subset, &SolverConfig::deterministic()).map_err(|e| e.to_string())?;
        pretty(&w)
    }
}

#[wasm_bindgen]
pub fn sample_state() -> String {
    api::SAMPLE_STATE.to_string()
}

#[wasm_bindgen]
pub fn sample_request() -> String {
    api::SAMPLE_REQUEST.to_string()
}

#[wasm_bindgen]
pub fn embed(state: &str, request: &str, objective: &str) -> Result<String, JsError> {
    api::embed(state, request, objective).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn verify(state: &str, embedding: &str) -> Result<String, JsError> {
    api::verify(state, embedding).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn whatif(state: &str, subset: &str) -> Result<String, JsError> {
    api::whatif(state, subset).map_err(|e| JsError::new(&e))
}
