//! Independent re-evaluation of an embedding against problem data.
//!
//! Nothing here touches the MIP model: every condition is computed from the
//! network model and the decoded embedding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::network::{expand_links, ElementId, EmbeddingProblem, Flow, ResourceClass, ResourceId, ValueType};

use super::embedding::{evaluate, migrated_elements, Embedding};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub violations: Vec<String>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, v: String) {
        self.violations.push(v);
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// What to check beyond placement feasibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckScope {
    /// Placement, capacities and flows only.
    Placement,
    /// Also migration flags, migration cost and objective.
    Full,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn verify_embedding(problem: &EmbeddingProblem, e: &Embedding, scope: CheckScope, tol: f64) -> CheckReport {
    let mut r = CheckReport::default();
    let s = &problem.substrate;
    let req = &problem.request;
    let graph = match expand_links(s.elements.values()) {
        Ok(g) => g,
        Err(err) => {
            r.push(format!("substrate: {err}"));
            return r;
        }
    };

    // mapping
    for (u, hosts) in &e.mapping {
        let Some(el) = req.elements.get(u) else {
            r.push(format!("mapping: unknown virtual element {u}"));
            continue;
        };
        if el.is_node() && hosts.len() != 1 {
            r.push(format!("map_node: {u} has {} hosts", hosts.len()));
        }
        for v in hosts {
            if !s.elements.contains_key(v) {
                r.push(format!("mapping: {u} on unknown substrate element {v}"));
            } else if !problem.policies.suit(u, v) {
                r.push(format!("allowed: {u} is not suitable for {v}"));
            }
        }
    }
    for u in req.elements.keys() {
        if e.mapping.get(u).is_none_or(BTreeSet::is_empty) {
            r.push(format!("mapping: {u} is not mapped"));
        }
    }
    let mapped = |u: &ElementId, v: &ElementId| e.mapping.get(u).is_some_and(|h| h.contains(v));

    // allocations
    let mut alloc_s: BTreeMap<(ElementId, ElementId, ResourceId, ResourceId), f64> = BTreeMap::new();
    let mut alloc_v: BTreeMap<(ElementId, ElementId, ResourceId), f64> = BTreeMap::new();
    for a in &e.allocations {
        if !a.amount.is_finite() || a.amount < -tol {
            r.push(format!("allocation: negative amount for {} at {}", a.element, a.host));
        }
        if !mapped(&a.element, &a.host) {
            r.push(format!("set_new: {} allocates at unmapped {}", a.element, a.host));
        }
        if !problem.resources_of(&a.element).contains(&a.virtual_resource) {
            r.push(format!("resource: {} does not request {}", a.element, a.virtual_resource));
        }
        let prop = s.prop(&a.virtual_resource, &a.substrate_resource);
        if prop <= 0.0 {
            r.push(format!(
                "resource: {} cannot be hosted by {}",
                a.virtual_resource, a.substrate_resource
            ));
        }
        *alloc_s
            .entry((a.element.clone(), a.host.clone(), a.virtual_resource.clone(), a.substrate_resource.clone()))
            .or_default() += a.amount;
        *alloc_v
            .entry((a.element.clone(), a.host.clone(), a.virtual_resource.clone()))
            .or_default() += prop * a.amount;
    }
    for (u, hosts) in &e.mapping {
        let Some(el) = req.elements.get(u) else { continue };
        for v in hosts {
            for rv in el.requested_resources() {
                let got = alloc_v.get(&(u.clone(), v.clone(), rv.clone())).copied().unwrap_or(0.0);
                let min_alloc = s.resources.min_alloc(&rv);
                if got < min_alloc - tol {
                    r.push(format!("relate_V: {u} at {v} gets {got} {rv}, below {min_alloc}"));
                }
                if el.is_node() {
                    for vt in ValueType::ALL {
                        let Some(want) = el.request(&rv, vt) else { continue };
                        let ok = match vt {
                            ValueType::Minimum => got >= want - tol,
                            ValueType::Maximum => got <= want + tol,
                            ValueType::Constant => close(got, want, tol),
                        };
                        if !ok {
                            r.push(format!("req_{vt}: {u} at {v} gets {got} {rv}, requested {want}"));
                        }
                    }
                }
            }
        }
    }

    // element and shared capacities
    let mut per_element: BTreeMap<(ElementId, ResourceId), f64> = BTreeMap::new();
    let mut per_resource: BTreeMap<ResourceId, f64> = BTreeMap::new();
    for ((_, v, _, rs), x) in &alloc_s {
        *per_element.entry((v.clone(), rs.clone())).or_default() += x;
        *per_resource.entry(rs.clone()).or_default() += x;
    }
    for ((v, rs), used) in &per_element {
        let cap = s.element_capacity(v, rs);
        if *used > cap + tol * cap.abs().max(1.0) {
            r.push(format!("ne_capacity: {v} uses {used} of {cap} {rs}"));
        }
    }
    for rt in s.resources.of_class(ResourceClass::Substrate) {
        if let Some(cap) = rt.shared_capacity.bounded() {
            let used = per_resource.get(&rt.id).copied().unwrap_or(0.0);
            if used > cap + tol * cap.abs().max(1.0) {
                r.push(format!("capacity: {} uses {used} of shared {cap}", rt.id));
            }
        }
    }

    // flows
    let mut flow_s: BTreeMap<(Flow, ElementId, ElementId, ResourceId, ResourceId), f64> = BTreeMap::new();
    for fa in &e.flows {
        let f = fa.flow();
        if !req.flows_of(&fa.link).contains(&f) {
            r.push(format!("flow: unknown flow {f}"));
            continue;
        }
        if fa.amount < -tol {
            r.push(format!("flow: negative amount on {f} {}>{}", fa.from, fa.to));
        }
        if !graph.are_adjacent(&fa.from, &fa.to) {
            r.push(format!("flow: {f} uses non-adjacent {}>{}", fa.from, fa.to));
        }
        if !mapped(&fa.link, &fa.from) {
            r.push(format!("direction: {f} leaves {} where {} is not mapped", fa.from, fa.link));
        }
        if !problem.resources_of(&fa.link).contains(&fa.virtual_resource) {
            r.push(format!("flow_res: {} does not request {}", fa.link, fa.virtual_resource));
        }
        if s.prop(&fa.virtual_resource, &fa.substrate_resource) <= 0.0 {
            r.push(format!(
                "flow_res: {} cannot be carried by {}",
                fa.virtual_resource, fa.substrate_resource
            ));
        }
        let cap = s.interface_capacity(&fa.from, &fa.to, &fa.substrate_resource);
        if fa.amount > cap + tol * cap.abs().max(1.0) {
            r.push(format!(
                "direction: {f} carries {} over {}>{} with capacity {cap}",
                fa.amount, fa.from, fa.to
            ));
        }
        *flow_s
            .entry((f, fa.from.clone(), fa.to.clone(), fa.virtual_resource.clone(), fa.substrate_resource.clone()))
            .or_default() += fa.amount;
    }

    for link in req.links() {
        let u = &link.id;
        let eps = problem.flow_epsilon(u);
        for f in req.flows_of(u) {
            let src_host = e.host_of(&f.source).cloned();
            let sink_host = e.host_of(&f.sink).cloned();
            for (end, host, family) in [(&f.source, &src_host, "map_src"), (&f.sink, &sink_host, "map_sink")] {
                if let Some(h) = host {
                    if !mapped(u, h) {
                        r.push(format!("{family}: {u} is not mapped at {h}, the host of {end}"));
                    }
                }
            }
            for rv in link.requested_resources() {
                // virtual flow per arc
                let mut fv: BTreeMap<(ElementId, ElementId), f64> = BTreeMap::new();
                for ((g, v, w, r2, rs), x) in &flow_s {
                    if g == f && r2 == &rv {
                        *fv.entry((v.clone(), w.clone())).or_default() += s.prop(&rv, rs) * x;
                    }
                }
                for v in s.elements.keys() {
                    let out: f64 = fv.iter().filter(|((a, _), _)| a == v).map(|(_, x)| x).sum();
                    let inc: f64 = fv.iter().filter(|((_, b), _)| b == v).map(|(_, x)| x).sum();
                    let net = out - inc;
                    let is_src = src_host.as_ref() == Some(v);
                    let is_sink = sink_host.as_ref() == Some(v);
                    for vt in ValueType::ALL {
                        let Some(want) = link.request(&rv, vt) else { continue };
                        let target = want * (is_src as u8 as f64 - is_sink as u8 as f64);
                        let ok = match vt {
                            ValueType::Constant => close(net, target, tol),
                            ValueType::Minimum => is_sink || net >= target - tol,
                            ValueType::Maximum => is_sink || net <= target + tol,
                        };
                        if !ok {
                            r.push(format!(
                                "req_f{}: {f} {rv} has net outflow {net} at {v}, expected {target}",
                                match vt {
                                    ValueType::Minimum => "min",
                                    ValueType::Maximum => "max",
                                    ValueType::Constant => "const",
                                }
                            ));
                        }
                    }
                    if mapped(u, v) && out + inc < eps - tol {
                        r.push(format!("relate_f: {f} {rv} does not pass through {v}"));
                    }
                }
                // envelope: per-flow in/out bounded by the link's allocation
                for rs in s.hosts_of(&rv).into_iter().map(|(rs, _)| rs) {
                    for v in s.elements.keys() {
                        let mut out = 0.0;
                        let mut inc = 0.0;
                        for ((g, a, b, r2, r3), x) in &flow_s {
                            if g == f && r2 == &rv && r3 == &rs {
                                if a == v {
                                    out += x;
                                }
                                if b == v {
                                    inc += x;
                                }
                            }
                        }
                        let alloc = alloc_s
                            .get(&(u.clone(), v.clone(), rv.clone(), rs.clone()))
                            .copied()
                            .unwrap_or(0.0);
                        if out > alloc + tol * alloc.max(1.0) {
                            r.push(format!("exp_out: {f} sends {out} {rs} from {v}, allocated {alloc}"));
                        }
                        if inc > alloc + tol * alloc.max(1.0) {
                            r.push(format!("exp_in: {f} receives {inc} {rs} at {v}, allocated {alloc}"));
                        }
                    }
                }
            }
        }
    }

    if scope == CheckScope::Full {
        let expected = migrated_elements(problem, &e.mapping);
        for u in expected.symmetric_difference(&e.migrations) {
            let flag = e.migrations.contains(u);
            r.push(format!(
                "migrated: mig({u}) is {} but the element {} its previous host",
                flag as u8,
                if flag { "keeps" } else { "leaves" }
            ));
        }
        let eval = evaluate(problem, e);
        if !close(eval.migration_cost, e.migration_cost, tol) {
            r.push(format!(
                "objective: migration cost {} differs from recomputed {}",
                e.migration_cost, eval.migration_cost
            ));
        }
        if !close(eval.objective, e.objective, tol) {
            r.push(format!(
                "objective: {} differs from recomputed {}",
                e.objective, eval.objective
            ));
        }
    }
    r
}
