//! Embedding lifecycle: substrate state, embedding, re-optimization and
//! what-if queries.

pub mod doc;
mod embedding;
mod ops;
mod verify;

use std::collections::BTreeMap;

use crate::error::EngineError;
use crate::network::{
    Capacity, ElementId, EmbeddingProblem, ObjectiveConfig, PolicyMatrices, ResourceClass, ResourceId,
    SubstrateGraph, VirtualRequest,
};

pub use embedding::{decode, evaluate, migrated_elements, Allocation, Embedding, Evaluation, FlowAllocation};
pub use ops::{
    apply_plan, embed, reembed, whatif_subset, EmbedOutcome, EmbedReport, MigrationInputs, Plan, PlanEntry,
    ReembedMode, Rejection, WhatIf,
};
pub use verify::{verify_embedding, CheckReport, CheckScope};

/// Tolerance used when checking commits against residual capacities.
pub const COMMIT_TOLERANCE: f64 = 1e-6;

/// A request that holds substrate resources.
#[derive(Clone, Debug, PartialEq)]
pub struct Committed {
    pub request: VirtualRequest,
    pub policies: PolicyMatrices,
    pub embedding: Embedding,
}

/// Substrate plus the embeddings committed onto it.
///
/// Residuals are always recomputed from the committed set in id order, so a
/// commit followed by a withdraw restores them bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstrateState {
    pub substrate: SubstrateGraph,
    committed: BTreeMap<String, Committed>,
}

impl SubstrateState {
    pub fn new(substrate: SubstrateGraph) -> Self {
        SubstrateState {
            substrate,
            committed: BTreeMap::new(),
        }
    }

    pub fn committed(&self) -> &BTreeMap<String, Committed> {
        &self.committed
    }

    pub fn get(&self, id: &str) -> Option<&Committed> {
        self.committed.get(id)
    }

    pub fn is_empty(&self) -> bool {
        self.committed.is_empty()
    }

    fn usage(&self, excluding: Option<&str>) -> BTreeMap<(ElementId, ResourceId), f64> {
        let mut used: BTreeMap<(ElementId, ResourceId), f64> = BTreeMap::new();
        for (id, c) in &self.committed {
            if Some(id.as_str()) == excluding {
                continue;
            }
            for a in &c.embedding.allocations {
                *used.entry((a.host.clone(), a.substrate_resource.clone())).or_default() += a.amount;
            }
        }
        used
    }

    /// Residual capacity per `(element, resource)`; may dip below zero only
    /// by rounding noise.
    pub fn residuals(&self) -> BTreeMap<(ElementId, ResourceId), f64> {
        let used = self.usage(None);
        let mut out = BTreeMap::new();
        for (id, el) in &self.substrate.elements {
            for (rs, cap) in &el.capacities {
                let u = used.get(&(id.clone(), rs.clone())).copied().unwrap_or(0.0);
                out.insert((id.clone(), rs.clone()), cap - u);
            }
        }
        out
    }

    /// Residual shared capacity of every bounded substrate resource.
    pub fn shared_residuals(&self) -> BTreeMap<ResourceId, f64> {
        let used = self.usage(None);
        self.substrate
            .resources
            .of_class(ResourceClass::Substrate)
            .filter_map(|rt| {
                let cap = rt.shared_capacity.bounded()?;
                let u: f64 = used.iter().filter(|((_, r), _)| *r == rt.id).map(|(_, x)| x).sum();
                Some((rt.id.clone(), cap - u))
            })
            .collect()
    }

    /// The substrate with capacities reduced by every committed request
    /// other than `excluding`.
    pub fn residual_substrate(&self, excluding: Option<&str>) -> SubstrateGraph {
        let used = self.usage(excluding);
        let mut s = self.substrate.clone();
        let mut per_resource: BTreeMap<ResourceId, f64> = BTreeMap::new();
        for ((v, rs), x) in &used {
            *per_resource.entry(rs.clone()).or_default() += x;
            if let Some(el) = s.elements.get_mut(v) {
                if let Some(cap) = el.capacities.get_mut(rs) {
                    *cap = (*cap - x).max(0.0);
                }
            }
        }
        for rt in s.resources.resources.values_mut() {
            if let Capacity::Bounded(cap) = rt.shared_capacity {
                let u = per_resource.get(&rt.id).copied().unwrap_or(0.0);
                rt.shared_capacity = Capacity::Bounded((cap - u).max(0.0));
            }
        }
        s
    }

    /// Problem for `request` against the residual substrate.
    pub fn problem_for(
        &self,
        request: &VirtualRequest,
        policies: &PolicyMatrices,
        objective: ObjectiveConfig,
        excluding: Option<&str>,
    ) -> Result<EmbeddingProblem, EngineError> {
        let mut request = request.clone();
        request.expand_missing_flows()?;
        Ok(EmbeddingProblem {
            substrate: self.residual_substrate(excluding),
            request,
            policies: policies.clone(),
            migration: Default::default(),
            objective,
        })
    }

    /// Adds `embedding` after checking it against the current residuals.
    pub fn commit(
        &mut self,
        request: VirtualRequest,
        policies: PolicyMatrices,
        embedding: Embedding,
    ) -> Result<(), EngineError> {
        let id = request.id.clone();
        if self.committed.contains_key(&id) {
            return Err(EngineError::AlreadyCommitted(id));
        }
        if embedding.request_id != id {
            return Err(EngineError::Refused(format!(
                "embedding belongs to `{}`, not `{id}`",
                embedding.request_id
            )));
        }
        let problem = self.problem_for(&request, &policies, ObjectiveConfig::ResourceMin, None)?;
        let report = verify_embedding(&problem, &embedding, CheckScope::Placement, COMMIT_TOLERANCE);
        if !report.is_clean() {
            return Err(EngineError::Refused(report.to_string()));
        }
        self.committed.insert(
            id,
            Committed {
                request: problem.request,
                policies,
                embedding,
            },
        );
        Ok(())
    }

    pub fn withdraw(&mut self, id: &str) -> Result<Committed, EngineError> {
        self.committed
            .remove(id)
            .ok_or_else(|| EngineError::UnknownRequest(id.to_string()))
    }
}
