use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::mip::{MipModel, VarKey};
use crate::network::{ElementId, EmbeddingProblem, Flow, ObjectiveConfig, ResourceClass, ResourceId};
use crate::solver::MilpSolution;

/// Substrate resource allocated to one virtual element at one host.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub element: ElementId,
    pub host: ElementId,
    pub virtual_resource: ResourceId,
    pub substrate_resource: ResourceId,
    pub amount: f64,
}

/// Substrate resource carried by one flow over one expanded arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowAllocation {
    pub link: ElementId,
    pub source: ElementId,
    pub sink: ElementId,
    pub from: ElementId,
    pub to: ElementId,
    pub virtual_resource: ResourceId,
    pub substrate_resource: ResourceId,
    pub amount: f64,
}

impl FlowAllocation {
    pub fn flow(&self) -> Flow {
        Flow {
            link: self.link.clone(),
            source: self.source.clone(),
            sink: self.sink.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub request_id: String,
    /// Hosts of each virtual element; a single host for nodes.
    pub mapping: BTreeMap<ElementId, BTreeSet<ElementId>>,
    pub allocations: Vec<Allocation>,
    #[serde(default)]
    pub flows: Vec<FlowAllocation>,
    #[serde(default)]
    pub migrations: BTreeSet<ElementId>,
    pub objective: f64,
    #[serde(default)]
    pub migration_cost: f64,
}

impl Embedding {
    pub fn host_of(&self, u: &ElementId) -> Option<&ElementId> {
        self.mapping.get(u).and_then(|s| s.iter().next())
    }

    /// `(element, host)` pairs of the mapping.
    pub fn pairs(&self) -> BTreeSet<(ElementId, ElementId)> {
        self.mapping
            .iter()
            .flat_map(|(u, hosts)| hosts.iter().map(move |v| (u.clone(), v.clone())))
            .collect()
    }

    /// Substrate usage per `(host, resource)`.
    pub fn usage(&self) -> BTreeMap<(ElementId, ResourceId), f64> {
        let mut out: BTreeMap<(ElementId, ResourceId), f64> = BTreeMap::new();
        for a in &self.allocations {
            *out.entry((a.host.clone(), a.substrate_resource.clone())).or_default() += a.amount;
        }
        out
    }
}

/// Objective and migration cost of an embedding, computed from problem data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub migration_cost: f64,
}

/// Elements that left at least one previous host.
pub fn migrated_elements(problem: &EmbeddingProblem, mapping: &BTreeMap<ElementId, BTreeSet<ElementId>>) -> BTreeSet<ElementId> {
    problem
        .migration
        .old
        .iter()
        .filter(|(u, v)| !mapping.get(u).is_some_and(|hosts| hosts.contains(v)))
        .map(|(u, _)| u.clone())
        .collect()
}

pub fn evaluate(problem: &EmbeddingProblem, e: &Embedding) -> Evaluation {
    let mut migration_cost = 0.0;
    for u in &e.migrations {
        if let Some(el) = problem.request.elements.get(u) {
            migration_cost += problem.migration.penalty(el);
        }
    }
    for (u, v) in e.pairs() {
        migration_cost += problem.migration.transit(&u, &v);
    }
    let placement = match problem.objective {
        ObjectiveConfig::ResourceMin => e
            .allocations
            .iter()
            .map(|a| problem.policies.weight(&a.element, &a.host) * a.amount)
            .sum(),
        ObjectiveConfig::LoadBalance { c } => {
            let mut loads: BTreeMap<&ResourceId, f64> = BTreeMap::new();
            for rt in problem.substrate.resources.of_class(ResourceClass::Substrate) {
                loads.insert(&rt.id, 0.0);
            }
            for a in &e.allocations {
                let Some(rt) = problem.substrate.resources.get(&a.substrate_resource) else {
                    continue;
                };
                let cap = problem.substrate.load_capacity(rt);
                if cap > 0.0 {
                    *loads.entry(&rt.id).or_default() += a.amount * rt.load_weight / cap;
                }
            }
            let max = loads.values().copied().fold(0.0, f64::max);
            c * max + loads.values().sum::<f64>()
        }
    };
    Evaluation {
        objective: placement + migration_cost,
        migration_cost,
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x
    }
}

/// Reads the embedding encoded by a solution of `model`.
pub fn decode(problem: &EmbeddingProblem, model: &MipModel, solution: &MilpSolution) -> Embedding {
    let mut mapping: BTreeMap<ElementId, BTreeSet<ElementId>> = BTreeMap::new();
    let mut allocations = Vec::new();
    let mut flows = Vec::new();
    for (var, &x) in model.variables.iter().zip(&solution.point) {
        match &var.key {
            VarKey::New { element, host } if x > 0.5 => {
                mapping.entry(element.clone()).or_default().insert(host.clone());
            }
            VarKey::AllocS { element, host, rv, rs } if x > 1e-9 => allocations.push(Allocation {
                element: element.clone(),
                host: host.clone(),
                virtual_resource: rv.clone(),
                substrate_resource: rs.clone(),
                amount: snap(x),
            }),
            VarKey::FlowS { flow, from, to, rv, rs } if x > 1e-9 => flows.push(FlowAllocation {
                link: flow.link.clone(),
                source: flow.source.clone(),
                sink: flow.sink.clone(),
                from: from.clone(),
                to: to.clone(),
                virtual_resource: rv.clone(),
                substrate_resource: rs.clone(),
                amount: snap(x),
            }),
            _ => {}
        }
    }
    let migrations = migrated_elements(problem, &mapping);
    let mut e = Embedding {
        request_id: problem.request.id.clone(),
        mapping,
        allocations,
        flows,
        migrations,
        objective: 0.0,
        migration_cost: 0.0,
    };
    let eval = evaluate(problem, &e);
    e.objective = eval.objective;
    e.migration_cost = eval.migration_cost;
    e
}
