//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cloudnet_core::network::*;
use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn catalog() -> ResourceCatalog {
    ResourceCatalog::new([
        ResourceType::virtual_resource("slots_v", "/node/slots", 0.0),
        ResourceType::substrate_resource("slots", "/node/slots", 1.0),
        ResourceType::virtual_resource("bw_v", "/link/bandwidth", 0.0),
        ResourceType::substrate_resource("bw", "/link/bandwidth", 1.0),
    ])
}

pub fn link_id(a: &str, b: &str) -> String {
    format!("{a}-{b}")
}

/// Nodes with `slots` and `bw` capacity, links `a-b` with `bw` capacity and
/// interfaces of capacity `iface` in both directions.
pub fn substrate(nodes: &[(&str, f64, f64)], edges: &[(&str, &str, f64)], iface: f64) -> SubstrateGraph {
    let mut s = SubstrateGraph::new(catalog());
    for (n, slots, bw) in nodes {
        s.add_element(NetworkElement::substrate_node(n).with_capacity("slots", *slots).with_capacity("bw", *bw));
    }
    for (a, b, bw) in edges {
        let l = link_id(a, b);
        s.add_element(NetworkElement::substrate_link(&l, &[a, b]).with_capacity("bw", *bw));
        s.set_interface_both(a, &l, "bw", iface);
        s.set_interface_both(b, &l, "bw", iface);
    }
    s.set_prop("slots_v", "slots", 1.0);
    s.set_prop("bw_v", "bw", 1.0);
    s
}

pub fn triangle(slots: f64, bw: f64) -> SubstrateGraph {
    substrate(
        &[("A", slots, bw), ("B", slots, bw), ("C", slots, bw)],
        &[("A", "B", bw), ("A", "C", bw), ("B", "C", bw)],
        bw,
    )
}

/// Virtual nodes with a constant slot demand; links with a bandwidth
/// request of the given type.
pub fn request(id: &str, nodes: &[(&str, f64)], links: &[(&str, &[&str], ValueType, f64)]) -> VirtualRequest {
    let mut r = VirtualRequest::new(id);
    for (n, d) in nodes {
        r.add_element(NetworkElement::virtual_node(n).with_request("slots_v", ValueType::Constant, *d));
    }
    for (l, ends, vt, d) in links {
        r.add_element(NetworkElement::virtual_link(l, ends).with_request("bw_v", *vt, *d));
    }
    r.expand_missing_flows().unwrap();
    r
}

pub fn fixed(substrate: &SubstrateGraph, pins: &[(&str, &str)]) -> PolicyMatrices {
    let mut p = PolicyMatrices::default();
    for (u, v) in pins {
        p.fix(&ElementId::new(*u), &ElementId::new(*v), substrate);
    }
    p
}

pub fn eid(s: &str) -> ElementId {
    ElementId::new(s)
}

struct Lp {
    p: Problem,
    impossible: bool,
}

impl Lp {
    fn new() -> Self {
        Lp {
            p: Problem::new(OptimizationDirection::Minimize),
            impossible: false,
        }
    }

    fn row(&mut self, terms: Vec<(Variable, f64)>, op: ComparisonOp, rhs: f64) {
        if terms.is_empty() {
            let ok = match op {
                ComparisonOp::Le => 0.0 <= rhs + 1e-9,
                ComparisonOp::Ge => 0.0 >= rhs - 1e-9,
                ComparisonOp::Eq => rhs.abs() <= 1e-9,
            };
            self.impossible |= !ok;
        } else {
            self.p.add_constraint(terms.as_slice(), op, rhs);
        }
    }

    fn solve(&self) -> Option<f64> {
        if self.impossible {
            return None;
        }
        self.p.solve().ok().map(|s| s.objective())
    }
}

/// Exact optimum of a migration-free, resource-minimizing problem whose
/// virtual resources all have `min_alloc = 0`, by enumerating node mappings
/// and solving one flow LP per mapping. `None` when infeasible.
pub fn brute_force(problem: &EmbeddingProblem) -> Option<f64> {
    assert!(problem.migration.is_empty());
    assert_eq!(problem.objective, ObjectiveConfig::ResourceMin);
    let nodes: Vec<&NetworkElement> = problem.request.nodes().collect();
    let hosts: Vec<&ElementId> = problem.substrate.elements.keys().collect();
    let choices: Vec<Vec<&ElementId>> = nodes
        .iter()
        .map(|u| hosts.iter().copied().filter(|v| problem.policies.suit(&u.id, v)).collect())
        .collect();
    let mut best: Option<f64> = None;
    let mut idx = vec![0usize; nodes.len()];
    if choices.iter().any(Vec::is_empty) {
        return None;
    }
    loop {
        let mapping: BTreeMap<ElementId, ElementId> = nodes
            .iter()
            .zip(&idx)
            .enumerate()
            .map(|(k, (u, &i))| (u.id.clone(), choices[k][i].clone()))
            .collect();
        if let Some(v) = mapping_lp(problem, &mapping) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn mapping_lp(problem: &EmbeddingProblem, mapping: &BTreeMap<ElementId, ElementId>) -> Option<f64> {
    let s = &problem.substrate;
    let req = &problem.request;
    let pol = &problem.policies;
    let mut lp = Lp::new();
    // hosts of every element: nodes on their mapped host, links on every
    // suitable element (mapping a link more widely only relaxes)
    let mut on: BTreeMap<&ElementId, BTreeSet<ElementId>> = BTreeMap::new();
    for u in req.nodes() {
        on.insert(&u.id, [mapping[&u.id].clone()].into());
    }
    for l in req.links() {
        let h: BTreeSet<ElementId> = s.elements.keys().filter(|v| pol.suit(&l.id, v)).cloned().collect();
        for end in &l.endpoints {
            if !h.contains(&mapping[end]) {
                return None;
            }
        }
        if h.is_empty() {
            return None;
        }
        on.insert(&l.id, h);
    }

    let mut alloc: BTreeMap<(ElementId, ElementId, ResourceId, ResourceId), Variable> = BTreeMap::new();
    for u in req.elements.values() {
        for v in &on[&u.id] {
            for rv in u.requested_resources() {
                for (rs, _) in s.hosts_of(&rv) {
                    let w = pol.weight(&u.id, v);
                    alloc.insert((u.id.clone(), v.clone(), rv.clone(), rs), lp.p.add_var(w, (0.0, f64::INFINITY)));
                }
            }
        }
    }
    // node requests
    for u in req.nodes() {
        let v = &mapping[&u.id];
        for ((rv, vt), amount) in &u.requests {
            let terms: Vec<(Variable, f64)> = s
                .hosts_of(rv)
                .into_iter()
                .map(|(rs, prop)| (alloc[&(u.id.clone(), v.clone(), rv.clone(), rs)], prop))
                .collect();
            let op = match vt {
                ValueType::Minimum => ComparisonOp::Ge,
                ValueType::Maximum => ComparisonOp::Le,
                ValueType::Constant => ComparisonOp::Eq,
            };
            lp.row(terms, op, *amount);
        }
    }
    // element and shared capacity
    let mut per_elem: BTreeMap<(ElementId, ResourceId), Vec<(Variable, f64)>> = BTreeMap::new();
    let mut per_res: BTreeMap<ResourceId, Vec<(Variable, f64)>> = BTreeMap::new();
    for ((_, v, _, rs), x) in &alloc {
        per_elem.entry((v.clone(), rs.clone())).or_default().push((*x, 1.0));
        per_res.entry(rs.clone()).or_default().push((*x, 1.0));
    }
    for ((v, rs), terms) in per_elem {
        lp.row(terms, ComparisonOp::Le, s.element_capacity(&v, &rs));
    }
    for (rs, terms) in per_res {
        if let Some(cap) = s.resources.get(&rs).and_then(|r| r.shared_capacity.bounded()) {
            lp.row(terms, ComparisonOp::Le, cap);
        }
    }
    // flows on arcs between link hosts
    let adjacency: Vec<(ElementId, ElementId)> = s
        .elements
        .values()
        .filter(|e| e.is_link())
        .flat_map(|l| {
            l.endpoints
                .iter()
                .flat_map(move |n| [(n.clone(), l.id.clone()), (l.id.clone(), n.clone())])
        })
        .collect();
    for l in req.links() {
        let h = &on[&l.id];
        let arcs: Vec<&(ElementId, ElementId)> =
            adjacency.iter().filter(|(a, b)| h.contains(a) && h.contains(b)).collect();
        for f in req.flows_of(&l.id) {
            let hs = &mapping[&f.source];
            let ht = &mapping[&f.sink];
            for ((rv, vt), amount) in &l.requests {
                let mut x: BTreeMap<(&ElementId, &ElementId, ResourceId), Variable> = BTreeMap::new();
                for (a, b) in &arcs {
                    for (rs, _) in s.hosts_of(rv) {
                        let cap = s.interface_capacity(a, b, &rs);
                        x.insert((a, b, rs), lp.p.add_var(0.0, (0.0, cap)));
                    }
                }
                for v in h {
                    let mut net = Vec::new();
                    for ((a, b, rs), var) in &x {
                        let prop = s.prop(rv, rs);
                        if *a == v {
                            net.push((*var, prop));
                        }
                        if *b == v {
                            net.push((*var, -prop));
                        }
                    }
                    let target = amount * ((v == hs) as u8 as f64 - (v == ht) as u8 as f64);
                    match vt {
                        ValueType::Constant => lp.row(net, ComparisonOp::Eq, target),
                        ValueType::Minimum if v != ht => lp.row(net, ComparisonOp::Ge, target),
                        ValueType::Maximum if v != ht => lp.row(net, ComparisonOp::Le, target),
                        _ => {}
                    }
                    for (rs, _) in s.hosts_of(rv) {
                        let a_var = alloc[&(l.id.clone(), v.clone(), rv.clone(), rs.clone())];
                        for outgoing in [true, false] {
                            let mut terms: Vec<(Variable, f64)> = x
                                .iter()
                                .filter(|((a, b, r), _)| *r == rs && if outgoing { *a == v } else { *b == v })
                                .map(|(_, var)| (*var, 1.0))
                                .collect();
                            terms.push((a_var, -1.0));
                            lp.row(terms, ComparisonOp::Le, 0.0);
                        }
                    }
                }
            }
        }
    }
    lp.solve()
}

/// Node-arc multi-commodity flow feasibility on the undirected substrate
/// graph: one commodity per two-endpoint virtual link of constant demand,
/// endpoints at their fixed hosts. Node and link capacities bound the total
/// throughput, interfaces bound each commodity per direction.
pub fn mcf_feasible(s: &SubstrateGraph, request: &VirtualRequest, at: &BTreeMap<ElementId, ElementId>) -> bool {
    let mut lp = Lp::new();
    let slots = ResourceId::new("slots");
    let bw = ResourceId::new("bw");
    let mut slot_use: BTreeMap<&ElementId, f64> = BTreeMap::new();
    for u in request.nodes() {
        let d = u.request(&ResourceId::new("slots_v"), ValueType::Constant).unwrap_or(0.0);
        *slot_use.entry(&at[&u.id]).or_default() += d;
    }
    for (v, d) in &slot_use {
        if *d > s.element_capacity(v, &slots) + 1e-9 {
            return false;
        }
    }
    let edges: Vec<(&ElementId, &ElementId, &ElementId)> = s
        .elements
        .values()
        .filter(|e| e.is_link())
        .map(|l| (&l.id, &l.endpoints[0], &l.endpoints[1]))
        .collect();
    let nodes: Vec<&ElementId> = s.elements.values().filter(|e| e.is_node()).map(|e| &e.id).collect();
    let mut node_use: BTreeMap<&ElementId, Vec<(Variable, f64)>> = BTreeMap::new();
    let mut edge_use: BTreeMap<&ElementId, Vec<(Variable, f64)>> = BTreeMap::new();
    for l in request.links() {
        assert_eq!(l.endpoints.len(), 2);
        let d = l.request(&ResourceId::new("bw_v"), ValueType::Constant).expect("constant demand");
        let (src, dst) = (&at[&l.endpoints[0]], &at[&l.endpoints[1]]);
        if src == dst {
            continue;
        }
        // x[e][0] carries a -> b, x[e][1] carries b -> a
        let mut x = Vec::new();
        for (id, a, b) in &edges {
            let cap_ab = s.interface_capacity(a, id, &bw).min(s.interface_capacity(id, b, &bw));
            let cap_ba = s.interface_capacity(b, id, &bw).min(s.interface_capacity(id, a, &bw));
            let f = lp.p.add_var(0.0, (0.0, cap_ab));
            let g = lp.p.add_var(0.0, (0.0, cap_ba));
            edge_use.entry(id).or_default().extend([(f, 1.0), (g, 1.0)]);
            x.push((*a, *b, f, g));
        }
        for v in &nodes {
            let mut net = Vec::new();
            let mut inflow = Vec::new();
            for (a, b, f, g) in &x {
                if a == v {
                    net.push((*f, 1.0));
                    net.push((*g, -1.0));
                    inflow.push((*g, 1.0));
                }
                if b == v {
                    net.push((*g, 1.0));
                    net.push((*f, -1.0));
                    inflow.push((*f, 1.0));
                }
            }
            let target = d * ((*v == src) as u8 as f64 - (*v == dst) as u8 as f64);
            lp.row(net, ComparisonOp::Eq, target);
            // throughput: inflow, plus the demand injected at the source
            let t = lp.p.add_var(0.0, (0.0, f64::INFINITY));
            let mut def = inflow;
            def.push((t, -1.0));
            lp.row(def, ComparisonOp::Le, -if *v == src { d } else { 0.0 });
            node_use.entry(v).or_default().push((t, 1.0));
        }
    }
    for (v, terms) in node_use {
        lp.row(terms, ComparisonOp::Le, s.element_capacity(v, &bw));
    }
    for (e, terms) in edge_use {
        lp.row(terms, ComparisonOp::Le, s.element_capacity(e, &bw));
    }
    lp.solve().is_some()
}

/// Random connected substrate: a spanning tree plus extra edges.
pub fn random_substrate(rng: &mut impl Rng, n: usize, extra: usize, slots: &[f64], bw: &[f64]) -> SubstrateGraph {
    let names: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    let nodes: Vec<(&str, f64, f64)> = names
        .iter()
        .map(|s| (s.as_str(), *slots.choose(rng).unwrap(), *bw.choose(rng).unwrap()))
        .collect();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..n {
        edges.insert((rng.gen_range(0..i), i));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let e: Vec<(&str, &str, f64)> = edges
        .iter()
        .map(|(a, b)| (names[*a].as_str(), names[*b].as_str(), *bw.choose(rng).unwrap()))
        .collect();
    let iface = bw.iter().copied().fold(0.0, f64::max);
    substrate(&nodes, &e, iface)
}
