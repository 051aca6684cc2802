//! Edge-list topologies.
//!
//! ```text
//! # comment
//! node A slots=20 bw=8
//! A B
//! B C bw=4
//! ```
//!
//! Nodes appear implicitly through edges; `node` lines add isolated nodes
//! or override capacities. Edge annotations set the link capacity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::DocError;
use crate::network::{ElementId, NetworkElement, ResourceCatalog, ResourceType, SubstrateGraph};

pub const SLOTS_V: &str = "slots_v";
pub const SLOTS: &str = "slots";
pub const BW_V: &str = "bw_v";
pub const BW: &str = "bw";

/// Default capacities for elements without annotations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopologyDefaults {
    pub slots: f64,
    pub bandwidth: f64,
}

impl Default for TopologyDefaults {
    fn default() -> Self {
        TopologyDefaults {
            slots: 15.0,
            bandwidth: 15.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Topology {
    pub nodes: BTreeMap<String, BTreeMap<String, f64>>,
    /// Undirected edges `(a, b)` with `a < b`.
    pub edges: BTreeMap<(String, String), BTreeMap<String, f64>>,
    pub warnings: Vec<String>,
}

fn annotations(line: usize, words: &[&str]) -> Result<BTreeMap<String, f64>, DocError> {
    let mut out = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| DocError::Parse {
            line,
            message: format!("expected key=value, found `{w}`"),
        })?;
        let v: f64 = v.parse().map_err(|_| DocError::Parse {
            line,
            message: format!("bad number `{v}`"),
        })?;
        if !v.is_finite() || v < 0.0 {
            return Err(DocError::Parse {
                line,
                message: format!("capacity `{k}` must be a nonnegative number"),
            });
        }
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

pub fn parse_topology(text: &str) -> Result<Topology, DocError> {
    let mut t = Topology::default();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        if words[0] == "node" {
            let Some(id) = words.get(1) else {
                return Err(DocError::Parse {
                    line,
                    message: "`node` needs an id".into(),
                });
            };
            let ann = annotations(line, &words[2..])?;
            t.nodes.entry(id.to_string()).or_default().extend(ann);
            continue;
        }
        if words.len() < 2 || words[1].contains('=') {
            return Err(DocError::Parse {
                line,
                message: "expected `nodeA nodeB [key=value ...]`".into(),
            });
        }
        let (a, b) = (words[0], words[1]);
        if a == b {
            t.warnings.push(format!("line {line}: self-loop at {a} ignored"));
            continue;
        }
        let ann = annotations(line, &words[2..])?;
        t.nodes.entry(a.to_string()).or_default();
        t.nodes.entry(b.to_string()).or_default();
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        if t.edges.contains_key(&key) {
            t.warnings.push(format!("line {line}: duplicate edge {a} {b} ignored"));
            continue;
        }
        t.edges.insert(key, ann);
    }
    if t.nodes.is_empty() {
        return Err(DocError::Invalid("topology has no nodes".into()));
    }
    if t.components() > 1 {
        t.warnings.push(format!("topology is disconnected ({} components)", t.components()));
    }
    Ok(t)
}

impl Topology {
    pub fn neighbors(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = self.nodes.keys().map(|n| (n.as_str(), Vec::new())).collect();
        for (a, b) in self.edges.keys() {
            adj.get_mut(a.as_str()).expect("edge node").push(b);
            adj.get_mut(b.as_str()).expect("edge node").push(a);
        }
        adj
    }

    pub fn components(&self) -> usize {
        let adj = self.neighbors();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut count = 0;
        for start in adj.keys() {
            if !seen.insert(start) {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([*start]);
            while let Some(v) = queue.pop_front() {
                for w in &adj[v] {
                    if seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// Induced subtopology on the first `k` distinct nodes of a random walk.
    pub fn connected_subset(&self, k: usize, rng: &mut impl Rng) -> Result<Topology, DocError> {
        let picked = random_walk(&self.neighbors(), k, rng)
            .ok_or_else(|| DocError::Invalid(format!("no connected subset of {k} nodes found")))?;
        let keep: BTreeSet<&str> = picked.iter().copied().collect();
        Ok(Topology {
            nodes: self
                .nodes
                .iter()
                .filter(|(n, _)| keep.contains(n.as_str()))
                .map(|(n, a)| (n.clone(), a.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|((a, b), _)| keep.contains(a.as_str()) && keep.contains(b.as_str()))
                .map(|(e, a)| (e.clone(), a.clone()))
                .collect(),
            warnings: Vec::new(),
        })
    }

    pub fn to_substrate(&self, defaults: TopologyDefaults) -> Result<SubstrateGraph, DocError> {
        let mut s = SubstrateGraph::new(catalog());
        for (n, ann) in &self.nodes {
            let slots = ann.get(SLOTS).copied().unwrap_or(defaults.slots);
            let bw = ann.get(BW).copied().unwrap_or(defaults.bandwidth);
            s.add_element(NetworkElement::substrate_node(n).with_capacity(SLOTS, slots).with_capacity(BW, bw));
        }
        for ((a, b), ann) in &self.edges {
            let id = link_id(a, b);
            if s.elements.contains_key(&ElementId::new(id.clone())) {
                return Err(DocError::Invalid(format!("link id `{id}` collides with another element")));
            }
            let bw = ann.get(BW).copied().unwrap_or(defaults.bandwidth);
            let iface = ann.get("iface").copied().unwrap_or(bw);
            s.add_element(NetworkElement::substrate_link(&id, &[a, b]).with_capacity(BW, bw));
            s.set_interface_both(a, &id, BW, iface);
            s.set_interface_both(b, &id, BW, iface);
        }
        s.set_prop(SLOTS_V, SLOTS, 1.0);
        s.set_prop(BW_V, BW, 1.0);
        Ok(s)
    }
}

pub fn link_id(a: &str, b: &str) -> String {
    format!("{a}-{b}")
}

/// Slot and bandwidth resources used by generated scenarios.
pub fn catalog() -> ResourceCatalog {
    ResourceCatalog::new([
        ResourceType::virtual_resource(SLOTS_V, "/node/slots", 0.0),
        ResourceType::substrate_resource(SLOTS, "/node/slots", 1.0),
        ResourceType::virtual_resource(BW_V, "/link/bandwidth", 0.0),
        ResourceType::substrate_resource(BW, "/link/bandwidth", 1.0),
    ])
}

/// Parses an edge list and builds the substrate.
pub fn load_topology(text: &str, defaults: TopologyDefaults) -> Result<(SubstrateGraph, Vec<String>), DocError> {
    let t = parse_topology(text)?;
    let s = t.to_substrate(defaults)?;
    Ok((s, t.warnings))
}

const WALK_RETRIES: usize = 20;

/// Distinct nodes in visiting order of a random walk, restarting from a new
/// random node up to a fixed number of times.
pub(crate) fn random_walk<'a>(adj: &BTreeMap<&'a str, Vec<&'a str>>, k: usize, rng: &mut impl Rng) -> Option<Vec<&'a str>> {
    if k == 0 || k > adj.len() {
        return None;
    }
    let all: Vec<&str> = adj.keys().copied().collect();
    for _ in 0..WALK_RETRIES {
        let mut cur = *all.choose(rng)?;
        let mut order = vec![cur];
        let mut seen: BTreeSet<&str> = [cur].into();
        let mut steps = 0;
        while order.len() < k && steps < 50 * k * k {
            steps += 1;
            let Some(next) = adj[cur].choose(rng) else { break };
            cur = next;
            if seen.insert(cur) {
                order.push(cur);
            }
        }
        if order.len() == k {
            return Some(order);
        }
    }
    None
}

/// Seeded random connected topology: a random tree plus `extra` chords.
pub fn random_topology(n: usize, extra: usize, rng: &mut impl Rng) -> Topology {
    let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let mut t = Topology {
        nodes: names.iter().map(|n| (n.clone(), BTreeMap::new())).collect(),
        ..Default::default()
    };
    let key = |a: usize, b: usize| {
        let (x, y) = (a.min(b), a.max(b));
        (names[x].clone(), names[y].clone())
    };
    for i in 1..n {
        t.edges.insert(key(rng.gen_range(0..i), i), BTreeMap::new());
    }
    let mut tries = 0;
    let mut added = 0;
    while added < extra && tries < 10 * extra + 10 && n > 2 {
        tries += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && t.edges.insert(key(a, b), BTreeMap::new()).is_none() {
            added += 1;
        }
    }
    t
}
