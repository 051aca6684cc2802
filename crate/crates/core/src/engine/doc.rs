//! JSON documents for substrate states and embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{DocError, EngineError};
use crate::network::doc::{NetworkDoc, PoliciesDoc, PropDoc, RequestDoc, ResourceDoc, SubstrateDoc};

use super::{Embedding, SubstrateState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommittedDoc {
    pub request: RequestDoc,
    #[serde(default)]
    pub policies: PoliciesDoc,
    pub embedding: Embedding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualDoc {
    pub element: String,
    pub resource: String,
    pub residual: f64,
}

/// Substrate plus committed embeddings. `residual` is informational and
/// ignored on input; residuals are always derived from the commits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub resources: Vec<ResourceDoc>,
    #[serde(default)]
    pub prop: Vec<PropDoc>,
    pub substrate: SubstrateDoc,
    #[serde(default)]
    pub committed: Vec<CommittedDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual: Vec<ResidualDoc>,
}

/// An embedding together with the request and policies it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingDoc {
    pub request: RequestDoc,
    #[serde(default)]
    pub policies: PoliciesDoc,
    pub embedding: Embedding,
}

fn engine(e: EngineError) -> DocError {
    DocError::Invalid(e.to_string())
}

impl StateDoc {
    pub fn parse(text: &str) -> Result<Self, DocError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn network(&self) -> NetworkDoc {
        NetworkDoc {
            resources: self.resources.clone(),
            prop: self.prop.clone(),
            substrate: self.substrate.clone(),
        }
    }

    /// Rebuilds the state, re-checking every commit in document order.
    pub fn to_state(&self) -> Result<SubstrateState, DocError> {
        let substrate = self.network().to_substrate()?;
        let mut state = SubstrateState::new(substrate);
        for c in &self.committed {
            let request = c.request.to_request()?;
            let policies = c.policies.to_policies(&state.substrate);
            state.commit(request, policies, c.embedding.clone()).map_err(engine)?;
        }
        Ok(state)
    }

    pub fn from_state(state: &SubstrateState) -> Self {
        let net = NetworkDoc::from_substrate(&state.substrate);
        StateDoc {
            resources: net.resources,
            prop: net.prop,
            substrate: net.substrate,
            committed: state
                .committed()
                .values()
                .map(|c| CommittedDoc {
                    request: RequestDoc::from_request(&c.request),
                    policies: PoliciesDoc::from_policies(&c.policies),
                    embedding: c.embedding.clone(),
                })
                .collect(),
            residual: state
                .residuals()
                .into_iter()
                .map(|((v, r), x)| ResidualDoc {
                    element: v.0,
                    resource: r.0,
                    residual: x,
                })
                .collect(),
        }
    }
}

impl EmbeddingDoc {
    pub fn parse(text: &str) -> Result<Self, DocError> {
        Ok(serde_json::from_str(text)?)
    }
}
