use std::collections::{BTreeMap, HashMap};

use crate::error::BuildError;
use crate::network::{
    expand_links, validate_problem, ElementId, EmbeddingProblem, ExpandedGraph, Flow,
    NetworkElement, ObjectiveConfig, ResourceClass, ResourceId, ValueType,
};

use super::{Family, MipModel, Relation, VarId, VarKey};

/// Side information recorded while building a model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildReport {
    /// Big-M used by the sink selector, keyed by `flow/resource`.
    pub big_m: BTreeMap<String, f64>,
    /// Link requests whose maximum/constant semantics cannot be strictly
    /// enforced on half-duplex substrate resources.
    pub warnings: Vec<String>,
}

/// Builds the complete embedding program for `problem`.
pub fn build(problem: &EmbeddingProblem) -> Result<MipModel, BuildError> {
    if let ObjectiveConfig::LoadBalance { c } = problem.objective {
        let sum: f64 = problem
            .substrate
            .resources
            .of_class(ResourceClass::Substrate)
            .map(|r| r.load_weight)
            .sum();
        if c < sum {
            return Err(BuildError::LoadFactor { c, sum });
        }
    }
    let report = validate_problem(problem);
    if !report.is_empty() {
        return Err(BuildError::Validation(report.to_string()));
    }
    let graph = expand_links(problem.substrate.elements.values())
        .map_err(|e| BuildError::Validation(e.to_string()))?;
    let mut b = Builder::new(problem, graph);
    b.variables();
    b.node_family();
    b.mapping_family();
    b.resource_relation_family();
    b.link_family();
    b.link_allocation_family();
    b.migration_family();
    b.objective();
    Ok(b.finish())
}

struct Builder<'a> {
    p: &'a EmbeddingProblem,
    graph: ExpandedGraph,
    hosts: Vec<ElementId>,
    arcs: Vec<(ElementId, ElementId)>,
    substrate_resources: Vec<ResourceId>,
    model: MipModel,
    vars: HashMap<VarKey, VarId>,
}

impl<'a> Builder<'a> {
    fn new(p: &'a EmbeddingProblem, graph: ExpandedGraph) -> Self {
        let hosts = p.substrate.elements.keys().cloned().collect();
        let arcs = graph.arcs();
        let substrate_resources = p
            .substrate
            .resources
            .of_class(ResourceClass::Substrate)
            .map(|r| r.id.clone())
            .collect();
        Builder {
            p,
            graph,
            hosts,
            arcs,
            substrate_resources,
            model: MipModel::new(),
            vars: HashMap::new(),
        }
    }

    fn finish(self) -> MipModel {
        self.model
    }

    fn elements(&self) -> impl Iterator<Item = &'a NetworkElement> {
        self.p.request.elements.values()
    }

    fn nodes(&self) -> impl Iterator<Item = &'a NetworkElement> {
        self.p.request.nodes()
    }

    fn links(&self) -> impl Iterator<Item = &'a NetworkElement> {
        self.p.request.links()
    }

    fn flows(&self, link: &ElementId) -> &'a [Flow] {
        self.p.request.flows_of(link)
    }

    fn hosts_of(&self, rv: &ResourceId) -> Vec<(ResourceId, f64)> {
        self.p.substrate.hosts_of(rv)
    }

    fn binary(&mut self, key: VarKey) -> VarId {
        let id = self.model.add_binary(key.clone());
        self.vars.insert(key, id);
        id
    }

    fn continuous(&mut self, key: VarKey) -> VarId {
        let id = self.model.add_continuous(key.clone());
        self.vars.insert(key, id);
        id
    }

    fn v(&self, key: &VarKey) -> VarId {
        *self
            .vars
            .get(key)
            .unwrap_or_else(|| panic!("variable {key} was not created"))
    }

    fn new_var(&self, u: &ElementId, v: &ElementId) -> VarId {
        self.v(&VarKey::New {
            element: u.clone(),
            host: v.clone(),
        })
    }

    fn alloc_v(&self, u: &ElementId, v: &ElementId, rv: &ResourceId) -> VarId {
        self.v(&VarKey::AllocV {
            element: u.clone(),
            host: v.clone(),
            rv: rv.clone(),
        })
    }

    fn alloc_s(&self, u: &ElementId, v: &ElementId, rv: &ResourceId, rs: &ResourceId) -> VarId {
        self.v(&VarKey::AllocS {
            element: u.clone(),
            host: v.clone(),
            rv: rv.clone(),
            rs: rs.clone(),
        })
    }

    fn flow_v(&self, f: &Flow, from: &ElementId, to: &ElementId, rv: &ResourceId) -> VarId {
        self.v(&VarKey::FlowV {
            flow: f.clone(),
            from: from.clone(),
            to: to.clone(),
            rv: rv.clone(),
        })
    }

    fn flow_s(&self, f: &Flow, from: &ElementId, to: &ElementId, rv: &ResourceId, rs: &ResourceId) -> VarId {
        self.v(&VarKey::FlowS {
            flow: f.clone(),
            from: from.clone(),
            to: to.clone(),
            rv: rv.clone(),
            rs: rs.clone(),
        })
    }

    fn add(&mut self, terms: Vec<(VarId, f64)>, rel: Relation, rhs: f64, family: Family, origin: String) {
        self.model.add_constraint(terms, rel, rhs, family, origin);
    }

    fn variables(&mut self) {
        let elements: Vec<&NetworkElement> = self.elements().collect();
        let hosts = self.hosts.clone();
        for u in &elements {
            for v in &hosts {
                self.binary(VarKey::New {
                    element: u.id.clone(),
                    host: v.clone(),
                });
            }
        }
        for u in &elements {
            self.binary(VarKey::Mig { element: u.id.clone() });
        }
        for u in &elements {
            for v in &hosts {
                for rv in u.requested_resources() {
                    self.continuous(VarKey::AllocV {
                        element: u.id.clone(),
                        host: v.clone(),
                        rv: rv.clone(),
                    });
                    for (rs, _) in self.hosts_of(&rv) {
                        self.continuous(VarKey::AllocS {
                            element: u.id.clone(),
                            host: v.clone(),
                            rv: rv.clone(),
                            rs,
                        });
                    }
                }
            }
        }
        let arcs = self.arcs.clone();
        for u in elements.iter().filter(|e| e.is_link()) {
            for f in self.flows(&u.id) {
                for v in &hosts {
                    self.binary(VarKey::NewFlow {
                        flow: f.clone(),
                        host: v.clone(),
                    });
                }
                for (v, w) in &arcs {
                    for rv in u.requested_resources() {
                        self.continuous(VarKey::FlowV {
                            flow: f.clone(),
                            from: v.clone(),
                            to: w.clone(),
                            rv: rv.clone(),
                        });
                        for (rs, _) in self.hosts_of(&rv) {
                            self.continuous(VarKey::FlowS {
                                flow: f.clone(),
                                from: v.clone(),
                                to: w.clone(),
                                rv: rv.clone(),
                                rs,
                            });
                        }
                    }
                }
            }
        }
        for rs in self.substrate_resources.clone() {
            self.continuous(VarKey::Load { rs });
        }
        self.continuous(VarKey::MaxLoad);
    }

    /// map_node, set_new, req_min, req_max, req_con.
    fn node_family(&mut self) {
        let hosts = self.hosts.clone();
        for u in self.nodes().collect::<Vec<_>>() {
            let terms = hosts.iter().map(|v| (self.new_var(&u.id, v), 1.0)).collect();
            self.add(terms, Relation::Eq, 1.0, Family::MapNode, u.id.to_string());
        }
        // set_new also gates link allocations so that no element allocates
        // where it is not mapped.
        for u in self.elements().collect::<Vec<_>>() {
            for v in &hosts {
                let new = self.new_var(&u.id, v);
                for rv in u.requested_resources() {
                    for (rs, _) in self.hosts_of(&rv) {
                        let cap = self.p.substrate.element_capacity(v, &rs);
                        let alloc = self.alloc_s(&u.id, v, &rv, &rs);
                        self.add(
                            vec![(alloc, 1.0), (new, -cap)],
                            Relation::Le,
                            0.0,
                            Family::SetNew,
                            format!("{},{v},{rv},{rs}", u.id),
                        );
                    }
                }
            }
        }
        for u in self.nodes().collect::<Vec<_>>() {
            for ((rv, vt), amount) in &u.requests {
                let (rel, family) = match vt {
                    ValueType::Minimum => (Relation::Ge, Family::ReqMin),
                    ValueType::Maximum => (Relation::Le, Family::ReqMax),
                    ValueType::Constant => (Relation::Eq, Family::ReqCon),
                };
                for v in &hosts {
                    let terms = vec![(self.alloc_v(&u.id, v, rv), 1.0), (self.new_var(&u.id, v), -amount)];
                    self.add(terms, rel, 0.0, family, format!("{},{v},{rv}", u.id));
                }
            }
        }
    }

    /// relate_V, allowed, ne_capacity, capacity, load, max_load.
    fn mapping_family(&mut self) {
        let hosts = self.hosts.clone();
        let elements: Vec<&NetworkElement> = self.elements().collect();
        for u in &elements {
            for v in &hosts {
                for rv in u.requested_resources() {
                    let min_alloc = self.p.substrate.resources.min_alloc(&rv);
                    let terms = vec![(self.alloc_v(&u.id, v, &rv), 1.0), (self.new_var(&u.id, v), -min_alloc)];
                    self.add(terms, Relation::Ge, 0.0, Family::RelateV, format!("{},{v},{rv}", u.id));
                }
            }
        }
        for u in &elements {
            for v in &hosts {
                let suit = if self.p.policies.suit(&u.id, v) { 1.0 } else { 0.0 };
                let new = self.new_var(&u.id, v);
                self.add(vec![(new, 1.0)], Relation::Le, suit, Family::Allowed, format!("{},{v}", u.id));
            }
        }

        let mut per_resource: BTreeMap<ResourceId, Vec<(VarId, f64)>> = BTreeMap::new();
        for rs in &self.substrate_resources {
            per_resource.insert(rs.clone(), Vec::new());
        }
        for v in &hosts {
            for rs in self.substrate_resources.clone() {
                let mut terms = Vec::new();
                for u in &elements {
                    for rv in u.requested_resources() {
                        if self.p.substrate.prop(&rv, &rs) > 0.0 {
                            terms.push((self.alloc_s(&u.id, v, &rv, &rs), 1.0));
                        }
                    }
                }
                if terms.is_empty() {
                    continue;
                }
                per_resource.get_mut(&rs).expect("seeded above").extend(terms.iter().copied());
                let cap = self.p.substrate.element_capacity(v, &rs);
                self.add(terms, Relation::Le, cap, Family::NeCapacity, format!("{v},{rs}"));
            }
        }
        for (rs, terms) in &per_resource {
            let rt = self.p.substrate.resources.get(rs).expect("catalog resource");
            if terms.is_empty() {
                continue;
            }
            if let Some(cap) = rt.shared_capacity.bounded() {
                self.add(terms.clone(), Relation::Le, cap, Family::Capacity, rs.to_string());
            }
        }
        let max_load = self.v(&VarKey::MaxLoad);
        for (rs, terms) in per_resource {
            let rt = self.p.substrate.resources.get(&rs).expect("catalog resource");
            let load = self.v(&VarKey::Load { rs: rs.clone() });
            let cap = self.p.substrate.load_capacity(rt);
            if cap > 0.0 && !terms.is_empty() {
                let scale = rt.load_weight / cap;
                let mut row: Vec<(VarId, f64)> = terms.iter().map(|(x, _)| (*x, scale)).collect();
                row.push((load, -1.0));
                self.add(row, Relation::Le, 0.0, Family::Load, rs.to_string());
            }
            self.add(vec![(load, 1.0), (max_load, -1.0)], Relation::Le, 0.0, Family::MaxLoad, rs.to_string());
        }
    }

    /// resource, flow_res.
    fn resource_relation_family(&mut self) {
        let hosts = self.hosts.clone();
        for u in self.elements().collect::<Vec<_>>() {
            for v in &hosts {
                for rv in u.requested_resources() {
                    let mut terms: Vec<(VarId, f64)> = self
                        .hosts_of(&rv)
                        .into_iter()
                        .map(|(rs, prop)| (self.alloc_s(&u.id, v, &rv, &rs), prop))
                        .collect();
                    terms.push((self.alloc_v(&u.id, v, &rv), -1.0));
                    self.add(terms, Relation::Eq, 0.0, Family::Resource, format!("{},{v},{rv}", u.id));
                }
            }
        }
        let arcs = self.arcs.clone();
        for u in self.links().collect::<Vec<_>>() {
            for f in self.flows(&u.id) {
                for (v, w) in &arcs {
                    for rv in u.requested_resources() {
                        let mut terms: Vec<(VarId, f64)> = self
                            .hosts_of(&rv)
                            .into_iter()
                            .map(|(rs, prop)| (self.flow_s(f, v, w, &rv, &rs), prop))
                            .collect();
                        terms.push((self.flow_v(f, v, w, &rv), -1.0));
                        self.add(terms, Relation::Eq, 0.0, Family::FlowRes, format!("{f},{v},{w},{rv}"));
                    }
                }
            }
        }
    }

    /// Largest possible net flow of `rv` through one vertex, plus the request
    /// and one, so that the sink selector always yields a tautology.
    fn big_m(&self, rv: &ResourceId, request: f64) -> f64 {
        let mut total = 0.0;
        for (rs, prop) in self.hosts_of(rv) {
            let caps: f64 = self
                .p
                .substrate
                .interface_capacities
                .iter()
                .filter(|((_, _, r), _)| *r == rs)
                .map(|(_, c)| *c)
                .sum();
            total += prop * caps;
        }
        1.0 + request + total
    }

    /// map_link, map_src, map_sink, req_fmin, req_fmax, req_fconst.
    fn link_family(&mut self) {
        let hosts = self.hosts.clone();
        for u in self.links().collect::<Vec<_>>() {
            let terms = hosts.iter().map(|v| (self.new_var(&u.id, v), 1.0)).collect();
            self.add(terms, Relation::Ge, 1.0, Family::MapLink, u.id.to_string());
        }
        for u in self.links().collect::<Vec<_>>() {
            for f in self.flows(&u.id) {
                for (end, family) in [(&f.source, Family::MapSrc), (&f.sink, Family::MapSink)] {
                    for v in &hosts {
                        let terms = vec![(self.new_var(&u.id, v), 1.0), (self.new_var(end, v), -1.0)];
                        self.add(terms, Relation::Ge, 0.0, family, format!("{f},{v}"));
                    }
                }
            }
        }
        let half_duplex: Vec<ResourceId> = self
            .p
            .substrate
            .resources
            .of_class(ResourceClass::Substrate)
            .filter(|r| r.is_half_duplex())
            .map(|r| r.id.clone())
            .collect();
        for u in self.links().collect::<Vec<_>>() {
            for ((rv, vt), amount) in &u.requests {
                if *vt != ValueType::Minimum {
                    for (rs, _) in self.hosts_of(rv) {
                        if half_duplex.contains(&rs) {
                            self.model.report.warnings.push(format!(
                                "link {} requests {vt} {rv} on half-duplex {rs}; only the net flow is bounded",
                                u.id
                            ));
                        }
                    }
                }
                for f in self.flows(&u.id) {
                    let m = self.big_m(rv, *amount);
                    self.model.report.big_m.insert(format!("{f}/{rv}"), m);
                    for v in &hosts {
                        let mut terms = Vec::new();
                        for w in self.graph.neighbors(v) {
                            terms.push((self.flow_v(f, v, w, rv), 1.0));
                            terms.push((self.flow_v(f, w, v, rv), -1.0));
                        }
                        let src = self.new_var(&f.source, v);
                        let sink = self.new_var(&f.sink, v);
                        let (rel, family, sink_coeff) = match vt {
                            ValueType::Minimum => (Relation::Ge, Family::ReqFmin, m),
                            ValueType::Maximum => (Relation::Le, Family::ReqFmax, -m),
                            ValueType::Constant => (Relation::Eq, Family::ReqFconst, *amount),
                        };
                        terms.push((src, -amount));
                        terms.push((sink, sink_coeff));
                        self.add(terms, rel, 0.0, family, format!("{f},{v},{rv}"));
                    }
                }
            }
        }
    }

    /// exp_out, exp_in, direction, relate_f and the new(f, v) tie-in.
    fn link_allocation_family(&mut self) {
        let hosts = self.hosts.clone();
        let arcs = self.arcs.clone();
        for u in self.links().collect::<Vec<_>>() {
            let eps = self.p.flow_epsilon(&u.id);
            for f in self.flows(&u.id) {
                for v in &hosts {
                    let neighbors: Vec<ElementId> = self.graph.neighbors(v).cloned().collect();
                    for rv in u.requested_resources() {
                        for (rs, _) in self.hosts_of(&rv) {
                            let alloc = self.alloc_s(&u.id, v, &rv, &rs);
                            let mut out: Vec<(VarId, f64)> =
                                neighbors.iter().map(|w| (self.flow_s(f, v, w, &rv, &rs), 1.0)).collect();
                            out.push((alloc, -1.0));
                            self.add(out, Relation::Le, 0.0, Family::ExpOut, format!("{f},{v},{rv},{rs}"));
                            let mut inc: Vec<(VarId, f64)> =
                                neighbors.iter().map(|w| (self.flow_s(f, w, v, &rv, &rs), 1.0)).collect();
                            inc.push((alloc, -1.0));
                            self.add(inc, Relation::Le, 0.0, Family::ExpIn, format!("{f},{v},{rv},{rs}"));
                        }
                    }
                }
                for (v, w) in &arcs {
                    let new = self.new_var(&u.id, v);
                    for rv in u.requested_resources() {
                        for (rs, _) in self.hosts_of(&rv) {
                            let cap = self.p.substrate.interface_capacity(v, w, &rs);
                            let terms = vec![(self.flow_s(f, v, w, &rv, &rs), 1.0), (new, -cap)];
                            self.add(terms, Relation::Le, 0.0, Family::Direction, format!("{f},{v},{w},{rv},{rs}"));
                        }
                    }
                }
                for v in &hosts {
                    let neighbors: Vec<ElementId> = self.graph.neighbors(v).cloned().collect();
                    let mut through = Vec::new();
                    for rv in u.requested_resources() {
                        let mut terms = Vec::new();
                        for (rs, _) in self.hosts_of(&rv) {
                            for w in &neighbors {
                                terms.push((self.flow_s(f, v, w, &rv, &rs), 1.0));
                                terms.push((self.flow_s(f, w, v, &rv, &rs), 1.0));
                            }
                        }
                        through.extend(terms.iter().copied());
                        terms.push((self.new_var(&u.id, v), -eps));
                        self.add(terms, Relation::Ge, 0.0, Family::RelateF, format!("{f},{v},{rv}"));
                    }
                    let newf = self.v(&VarKey::NewFlow {
                        flow: f.clone(),
                        host: v.clone(),
                    });
                    let new = self.new_var(&u.id, v);
                    self.add(vec![(newf, 1.0), (new, -1.0)], Relation::Le, 0.0, Family::FlowMap, format!("{f},{v}"));
                    through.push((newf, -eps));
                    self.add(through, Relation::Ge, 0.0, Family::FlowMap, format!("{f},{v},through"));
                }
            }
        }
    }

    /// new, migrated.
    fn migration_family(&mut self) {
        let hosts = self.hosts.clone();
        for u in self.elements().collect::<Vec<_>>() {
            let mig = self.v(&VarKey::Mig { element: u.id.clone() });
            let old_count = self.p.migration.old_hosts(&u.id).len() as f64;
            self.add(vec![(mig, 1.0)], Relation::Le, old_count, Family::New, u.id.to_string());
            for v in &hosts {
                let old = if self.p.migration.was_at(&u.id, v) { 1.0 } else { 0.0 };
                let new = self.new_var(&u.id, v);
                self.add(vec![(new, -1.0), (mig, -1.0)], Relation::Le, -old, Family::Migrated, format!("{},{v}", u.id));
            }
        }
    }

    fn migration_terms(&self) -> Vec<(VarId, f64)> {
        let mut terms = Vec::new();
        for u in self.elements() {
            let mig = self.v(&VarKey::Mig { element: u.id.clone() });
            terms.push((mig, self.p.migration.penalty(u)));
            for v in &self.hosts {
                let t = self.p.migration.transit(&u.id, v);
                if t != 0.0 {
                    terms.push((self.new_var(&u.id, v), t));
                }
            }
        }
        terms
    }

    fn objective(&mut self) {
        let mut terms = Vec::new();
        match self.p.objective {
            ObjectiveConfig::ResourceMin => {
                for u in self.elements() {
                    for v in &self.hosts {
                        let w = self.p.policies.weight(&u.id, v);
                        for rv in u.requested_resources() {
                            for (rs, _) in self.hosts_of(&rv) {
                                terms.push((self.alloc_s(&u.id, v, &rv, &rs), w));
                            }
                        }
                    }
                }
            }
            ObjectiveConfig::LoadBalance { c } => {
                terms.push((self.v(&VarKey::MaxLoad), c));
                for rs in &self.substrate_resources {
                    terms.push((self.v(&VarKey::Load { rs: rs.clone() }), 1.0));
                }
            }
        }
        terms.extend(self.migration_terms());
        self.model.set_objective(terms);
    }
}
