use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, ModelError, SolveError};
use crate::mip::{build, Family};
use crate::network::{
    ElementId, EmbeddingProblem, Flow, MigrationContext, NetworkElement, ObjectiveConfig, PolicyMatrices,
    VirtualRequest, DEFAULT_NODE_PENALTY,
};
use crate::solver::{solve_milp, MilpStatus, SolveStats, SolverConfig};

use super::embedding::{decode, evaluate, migrated_elements, Embedding};
use super::verify::{verify_embedding, CheckScope};
use super::{Committed, SubstrateState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub request_id: String,
    pub status: MilpStatus,
    pub note: String,
    /// Constraint families named by the root infeasibility proof.
    #[serde(default)]
    pub families: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EmbedOutcome {
    Accepted(Embedding),
    Rejected(Rejection),
}

#[derive(Clone, Debug)]
pub struct EmbedReport {
    pub outcome: EmbedOutcome,
    pub stats: SolveStats,
    pub variables: usize,
    pub constraints: usize,
    pub warnings: Vec<String>,
}

impl EmbedReport {
    pub fn embedding(&self) -> Option<&Embedding> {
        match &self.outcome {
            EmbedOutcome::Accepted(e) => Some(e),
            EmbedOutcome::Rejected(_) => None,
        }
    }
}

fn check_tolerance(config: &SolverConfig) -> f64 {
    (config.tolerance * 10.0).max(1e-6)
}

fn ensure_clean(problem: &EmbeddingProblem, e: &Embedding, config: &SolverConfig) -> Result<(), EngineError> {
    let report = verify_embedding(problem, e, CheckScope::Full, check_tolerance(config));
    if report.is_clean() {
        Ok(())
    } else {
        Err(SolveError::Numerical(format!("decoded embedding fails the checker:\n{report}")).into())
    }
}

/// Solves `problem` and decodes the incumbent, if any.
fn solve_problem(
    problem: &EmbeddingProblem,
    config: &SolverConfig,
) -> Result<(Option<Embedding>, MilpStatus, Vec<Family>, SolveStats, usize, usize, Vec<String>), EngineError> {
    let model = build(problem)?;
    let solution = solve_milp(&model, config)?;
    let mut warnings = model.report.warnings.clone();
    warnings.extend(solution.warnings.iter().cloned());
    let embedding = if solution.has_incumbent() {
        let e = decode(problem, &model, &solution);
        ensure_clean(problem, &e, config)?;
        Some(e)
    } else {
        None
    };
    Ok((
        embedding,
        solution.status,
        solution.infeasible_families,
        solution.stats,
        model.variables.len(),
        model.constraints.len(),
        warnings,
    ))
}

/// Embeds `request` into the residual substrate of `state` without committing.
pub fn embed(
    state: &SubstrateState,
    request: &VirtualRequest,
    policies: &PolicyMatrices,
    objective: ObjectiveConfig,
    config: &SolverConfig,
) -> Result<EmbedReport, EngineError> {
    let problem = state.problem_for(request, policies, objective, None)?;
    let (embedding, status, families, stats, variables, constraints, warnings) = solve_problem(&problem, config)?;
    let outcome = match embedding {
        Some(e) => EmbedOutcome::Accepted(e),
        None => {
            let note = match status {
                MilpStatus::Infeasible if families.is_empty() => "no feasible embedding".to_string(),
                MilpStatus::Infeasible => format!(
                    "root relaxation infeasible; involved families: {}",
                    families.iter().map(|f| f.tag()).collect::<Vec<_>>().join(", ")
                ),
                MilpStatus::TimeLimit => "time limit reached without a feasible embedding".to_string(),
                _ => "no embedding found".to_string(),
            };
            EmbedOutcome::Rejected(Rejection {
                request_id: request.id.clone(),
                status: if status == MilpStatus::TimeLimit { status } else { MilpStatus::Infeasible },
                note,
                families: families.iter().map(|f| f.tag().to_string()).collect(),
            })
        }
    };
    Ok(EmbedReport {
        outcome,
        stats,
        variables,
        constraints,
        warnings,
    })
}

/// Migration cost inputs for re-optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MigrationInputs {
    /// Penalty of migrating a node without an explicit entry.
    pub node_penalty: f64,
    #[serde(default)]
    pub penalty: BTreeMap<ElementId, f64>,
    /// Transit cost of moving a node to any new host without an explicit entry.
    #[serde(default)]
    pub default_transit: f64,
    #[serde(default, with = "pair_map")]
    pub transit: BTreeMap<(ElementId, ElementId), f64>,
}

impl Default for MigrationInputs {
    fn default() -> Self {
        MigrationInputs {
            node_penalty: DEFAULT_NODE_PENALTY,
            penalty: BTreeMap::new(),
            default_transit: 0.0,
            transit: BTreeMap::new(),
        }
    }
}

mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::network::ElementId;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        #[serde(rename = "virtual")]
        u: ElementId,
        substrate: ElementId,
        value: f64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<(ElementId, ElementId), f64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = m
            .iter()
            .map(|((u, v), x)| Entry {
                u: u.clone(),
                substrate: v.clone(),
                value: *x,
            })
            .collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(ElementId, ElementId), f64>, D::Error> {
        let v: Vec<Entry> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|e| ((e.u, e.substrate), e.value)).collect())
    }
}

impl MigrationInputs {
    /// Migration context of one committed request, with `rename` applied to
    /// its element ids.
    fn context(
        &self,
        request: &VirtualRequest,
        current: &Embedding,
        hosts: &[ElementId],
        rename: &dyn Fn(&ElementId) -> ElementId,
    ) -> MigrationContext {
        let mut m = MigrationContext::default();
        for (u, v) in current.pairs() {
            m.old.insert((rename(&u), v));
        }
        for el in request.elements.values() {
            let explicit = self.penalty.get(&el.id).copied();
            if let Some(p) = explicit.or(el.is_node().then_some(self.node_penalty)) {
                m.penalty.insert(rename(&el.id), p);
            }
            if !el.is_node() {
                continue;
            }
            let old = current.mapping.get(&el.id);
            for v in hosts {
                if old.is_some_and(|o| o.contains(v)) {
                    continue;
                }
                let t = self
                    .transit
                    .get(&(el.id.clone(), v.clone()))
                    .copied()
                    .unwrap_or(self.default_transit);
                if t != 0.0 {
                    m.transit.insert((rename(&el.id), v.clone()), t);
                }
            }
        }
        for ((u, v), t) in &self.transit {
            if request.elements.get(u).is_some_and(NetworkElement::is_link) {
                m.transit.insert((rename(u), v.clone()), *t);
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReembedMode {
    /// One request at a time, in id order, against the others' residuals.
    #[default]
    Sequential,
    /// All requests in a single model.
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub request_id: String,
    pub current: Embedding,
    pub proposed: Embedding,
    pub migrated: BTreeSet<ElementId>,
    pub migration_cost: f64,
    /// Objective of keeping the current embedding.
    pub status_quo: f64,
    pub objective: f64,
    pub improvement: f64,
}

/// Proposed migrations; nothing is committed until [`apply_plan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub mode: ReembedMode,
    pub entries: Vec<PlanEntry>,
    pub status_quo: f64,
    pub objective: f64,
    pub improvement: f64,
    pub migration_cost: f64,
    pub nodes_explored: u64,
}

fn improves(status_quo: f64, objective: f64) -> bool {
    status_quo - objective > 1e-6 * status_quo.abs().max(1.0)
}

/// `current` re-stamped against `problem`: no migrations, re-evaluated costs.
fn status_quo(problem: &EmbeddingProblem, current: &Embedding) -> Embedding {
    let mut e = current.clone();
    e.migrations = migrated_elements(problem, &e.mapping);
    let eval = evaluate(problem, &e);
    e.objective = eval.objective;
    e.migration_cost = eval.migration_cost;
    e
}

pub fn reembed(
    state: &SubstrateState,
    objective: ObjectiveConfig,
    inputs: &MigrationInputs,
    config: &SolverConfig,
    mode: ReembedMode,
) -> Result<Plan, EngineError> {
    match mode {
        ReembedMode::Sequential => reembed_sequential(state, objective, inputs, config),
        ReembedMode::Joint => reembed_joint(state, objective, inputs, config, None),
    }
}

fn reembed_sequential(
    state: &SubstrateState,
    objective: ObjectiveConfig,
    inputs: &MigrationInputs,
    config: &SolverConfig,
) -> Result<Plan, EngineError> {
    let hosts: Vec<ElementId> = state.substrate.elements.keys().cloned().collect();
    let mut work = state.clone();
    let mut plan = Plan {
        mode: ReembedMode::Sequential,
        entries: Vec::new(),
        status_quo: 0.0,
        objective: 0.0,
        improvement: 0.0,
        migration_cost: 0.0,
        nodes_explored: 0,
    };
    let ids: Vec<String> = state.committed.keys().cloned().collect();
    for id in ids {
        let c = work.withdraw(&id)?;
        let problem = EmbeddingProblem {
            substrate: work.residual_substrate(None),
            request: c.request.clone(),
            policies: c.policies.clone(),
            migration: inputs.context(&c.request, &c.embedding, &hosts, &|u| u.clone()),
            objective,
        };
        let current = status_quo(&problem, &c.embedding);
        let (proposed, _, _, stats, ..) = solve_problem(&problem, config)?;
        plan.nodes_explored += stats.nodes;
        plan.status_quo += current.objective;
        let keep = match proposed {
            Some(p) if improves(current.objective, p.objective) => {
                plan.objective += p.objective;
                plan.migration_cost += p.migration_cost;
                plan.entries.push(PlanEntry {
                    request_id: id.clone(),
                    current: current.clone(),
                    migrated: p.migrations.clone(),
                    migration_cost: p.migration_cost,
                    status_quo: current.objective,
                    objective: p.objective,
                    improvement: current.objective - p.objective,
                    proposed: p.clone(),
                });
                p
            }
            _ => {
                plan.objective += current.objective;
                c.embedding.clone()
            }
        };
        work.committed.insert(
            id,
            Committed {
                embedding: keep,
                ..c
            },
        );
    }
    plan.improvement = plan.status_quo - plan.objective;
    Ok(plan)
}

const SEP: &str = "::";

fn tag(rid: &str, u: &ElementId) -> ElementId {
    ElementId(format!("{rid}{SEP}{}", u.0))
}

fn untag(u: &ElementId) -> (String, ElementId) {
    match u.0.split_once(SEP) {
        Some((rid, rest)) => (rid.to_string(), ElementId::new(rest)),
        None => (String::new(), u.clone()),
    }
}

/// All committed requests as one problem; element ids are prefixed with
/// their request id.
fn joint_problem(
    state: &SubstrateState,
    objective: ObjectiveConfig,
    inputs: &MigrationInputs,
    subset: Option<&BTreeSet<ElementId>>,
) -> EmbeddingProblem {
    let hosts: Vec<ElementId> = state.substrate.elements.keys().cloned().collect();
    let mut request = VirtualRequest::new("joint");
    let mut policies = PolicyMatrices::default();
    let mut migration = MigrationContext::default();
    for (rid, c) in &state.committed {
        let rename = |u: &ElementId| tag(rid, u);
        for el in c.request.elements.values() {
            let mut el = el.clone();
            el.id = rename(&el.id);
            el.endpoints = el.endpoints.iter().map(rename).collect();
            request.add_element(el);
        }
        for (link, flows) in &c.request.flows {
            let flows = flows
                .iter()
                .map(|f| Flow {
                    link: rename(&f.link),
                    source: rename(&f.source),
                    sink: rename(&f.sink),
                })
                .collect();
            request.flows.insert(rename(link), flows);
        }
        for ((u, v), s) in &c.policies.suit {
            policies.suit.insert((rename(u), v.clone()), *s);
        }
        for ((u, v), w) in &c.policies.weight {
            policies.weight.insert((rename(u), v.clone()), *w);
        }
        let m = inputs.context(&c.request, &c.embedding, &hosts, &rename);
        migration.old.extend(m.old);
        migration.penalty.extend(m.penalty);
        migration.transit.extend(m.transit);
    }
    if let Some(subset) = subset {
        for u in request.elements.keys() {
            for v in &hosts {
                if !subset.contains(v) {
                    policies.suit.insert((u.clone(), v.clone()), false);
                }
            }
        }
    }
    EmbeddingProblem {
        substrate: state.substrate.clone(),
        request,
        policies,
        migration,
        objective,
    }
}

/// Splits a joint embedding back into per-request embeddings.
fn split(joint: &Embedding) -> BTreeMap<String, Embedding> {
    let mut out: BTreeMap<String, Embedding> = BTreeMap::new();
    fn entry<'a>(out: &'a mut BTreeMap<String, Embedding>, rid: &str) -> &'a mut Embedding {
        out.entry(rid.to_string()).or_insert_with(|| Embedding {
            request_id: rid.to_string(),
            mapping: BTreeMap::new(),
            allocations: Vec::new(),
            flows: Vec::new(),
            migrations: BTreeSet::new(),
            objective: 0.0,
            migration_cost: 0.0,
        })
    }
    for (u, hosts) in &joint.mapping {
        let (rid, u) = untag(u);
        entry(&mut out, &rid).mapping.insert(u, hosts.clone());
    }
    for a in &joint.allocations {
        let (rid, u) = untag(&a.element);
        let mut a = a.clone();
        a.element = u;
        entry(&mut out, &rid).allocations.push(a);
    }
    for f in &joint.flows {
        let (rid, link) = untag(&f.link);
        let mut f = f.clone();
        f.link = link;
        f.source = untag(&f.source).1;
        f.sink = untag(&f.sink).1;
        entry(&mut out, &rid).flows.push(f);
    }
    for u in &joint.migrations {
        let (rid, u) = untag(u);
        entry(&mut out, &rid).migrations.insert(u);
    }
    out
}

/// Joint re-optimization; with `subset`, every element is confined to it.
fn reembed_joint(
    state: &SubstrateState,
    objective: ObjectiveConfig,
    inputs: &MigrationInputs,
    config: &SolverConfig,
    subset: Option<&BTreeSet<ElementId>>,
) -> Result<Plan, EngineError> {
    let mut plan = Plan {
        mode: ReembedMode::Joint,
        entries: Vec::new(),
        status_quo: 0.0,
        objective: 0.0,
        improvement: 0.0,
        migration_cost: 0.0,
        nodes_explored: 0,
    };
    if state.committed.is_empty() {
        return Ok(plan);
    }
    let hosts: Vec<ElementId> = state.substrate.elements.keys().cloned().collect();
    let problem = joint_problem(state, objective, inputs, subset);
    let current_joint = merge(state);
    let current = status_quo(&problem, &current_joint);
    let (proposed, ..) = solve_problem(&problem, config)?;
    plan.status_quo = current.objective;
    plan.objective = current.objective;
    let Some(proposed) = proposed else { return Ok(plan) };
    if !improves(current.objective, proposed.objective) {
        return Ok(plan);
    }
    plan.objective = proposed.objective;
    plan.migration_cost = proposed.migration_cost;
    plan.improvement = current.objective - proposed.objective;
    for (rid, p) in split(&proposed) {
        let c = &state.committed[&rid];
        let single = EmbeddingProblem {
            substrate: state.substrate.clone(),
            request: c.request.clone(),
            policies: c.policies.clone(),
            migration: inputs.context(&c.request, &c.embedding, &hosts, &|u| u.clone()),
            objective,
        };
        let now = status_quo(&single, &c.embedding);
        let mut p = p;
        let eval = evaluate(&single, &p);
        p.objective = eval.objective;
        p.migration_cost = eval.migration_cost;
        if p.mapping == now.mapping && !improves(now.objective, p.objective) {
            continue;
        }
        plan.entries.push(PlanEntry {
            request_id: rid,
            migrated: p.migrations.clone(),
            migration_cost: p.migration_cost,
            status_quo: now.objective,
            objective: p.objective,
            improvement: now.objective - p.objective,
            current: now,
            proposed: p,
        });
    }
    plan.nodes_explored = 0;
    Ok(plan)
}

/// The committed embeddings as one joint embedding.
fn merge(state: &SubstrateState) -> Embedding {
    let mut e = Embedding {
        request_id: "joint".into(),
        mapping: BTreeMap::new(),
        allocations: Vec::new(),
        flows: Vec::new(),
        migrations: BTreeSet::new(),
        objective: 0.0,
        migration_cost: 0.0,
    };
    for (rid, c) in &state.committed {
        for (u, hosts) in &c.embedding.mapping {
            e.mapping.insert(tag(rid, u), hosts.clone());
        }
        for a in &c.embedding.allocations {
            let mut a = a.clone();
            a.element = tag(rid, &a.element);
            e.allocations.push(a);
        }
        for f in &c.embedding.flows {
            let mut f = f.clone();
            f.link = tag(rid, &f.link);
            f.source = tag(rid, &f.source);
            f.sink = tag(rid, &f.sink);
            e.flows.push(f);
        }
    }
    e
}

/// Commits every proposed embedding of `plan`.
pub fn apply_plan(state: &SubstrateState, plan: &Plan) -> Result<SubstrateState, EngineError> {
    let mut next = state.clone();
    let mut withdrawn = Vec::new();
    for entry in &plan.entries {
        withdrawn.push((next.withdraw(&entry.request_id)?, entry.proposed.clone()));
    }
    for (c, proposed) in withdrawn {
        next.commit(c.request, c.policies, proposed)?;
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub feasible: bool,
    pub status: MilpStatus,
    pub migration_cost: f64,
    /// Weighted resource cost of the relocated state plus migration cost.
    pub objective: f64,
    pub migrated: BTreeMap<String, BTreeSet<ElementId>>,
}

/// Could every committed request live on `subset` alone, and at what
/// migration cost?
pub fn whatif_subset(
    state: &SubstrateState,
    subset: &BTreeSet<ElementId>,
    config: &SolverConfig,
) -> Result<WhatIf, EngineError> {
    if subset.is_empty() {
        return Err(ModelError::Invalid("what-if subset is empty".into()).into());
    }
    if let Some(v) = subset.iter().find(|v| !state.substrate.elements.contains_key(*v)) {
        return Err(ModelError::Invalid(format!("what-if subset names unknown element `{v}`")).into());
    }
    let mut result = WhatIf {
        feasible: true,
        status: MilpStatus::Optimal,
        migration_cost: 0.0,
        objective: 0.0,
        migrated: BTreeMap::new(),
    };
    if state.committed.is_empty() {
        return Ok(result);
    }
    let inputs = MigrationInputs::default();
    let weighted = joint_problem(state, ObjectiveConfig::ResourceMin, &inputs, Some(subset));
    // pure migration cost: placement weights do not matter here
    let mut problem = weighted.clone();
    for u in problem.request.elements.keys() {
        for v in problem.substrate.elements.keys() {
            problem.policies.weight.insert((u.clone(), v.clone()), 0.0);
        }
    }
    let stranded = problem
        .request
        .elements
        .keys()
        .any(|u| !problem.substrate.elements.keys().any(|v| problem.policies.suit(u, v)));
    if stranded {
        result.feasible = false;
        result.status = MilpStatus::Infeasible;
        return Ok(result);
    }
    let (proposed, status, ..) = solve_problem(&problem, config)?;
    result.status = status;
    // second pass: keep the node placement, route with the real weights
    let proposed = match proposed {
        Some(p) => {
            let mut pinned = weighted.clone();
            for u in weighted.request.nodes().map(|n| &n.id) {
                if let Some(host) = p.host_of(u) {
                    pinned.policies.fix(u, host, &weighted.substrate);
                }
            }
            match solve_problem(&pinned, config)?.0 {
                Some(q) if evaluate(&weighted, &q).migration_cost <= evaluate(&weighted, &p).migration_cost + 1e-9 => {
                    Some(q)
                }
                _ => Some(p),
            }
        }
        None => None,
    };
    match proposed {
        Some(p) => {
            let eval = evaluate(&weighted, &p);
            result.migration_cost = eval.migration_cost;
            result.objective = eval.objective;
            for (rid, e) in split(&p) {
                if !e.migrations.is_empty() {
                    result.migrated.insert(rid, e.migrations);
                }
            }
        }
        None => result.feasible = false,
    }
    Ok(result)
}
