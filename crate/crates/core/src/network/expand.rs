//! Graph expansion: links become vertices so that shared channels with any
//! number of endpoints and point-to-point links are handled uniformly.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::ModelError;

use super::types::{ElementId, ElementKind, Flow, NetworkElement};

/// Expanded graph: every element is a vertex, edges only join a link-vertex
/// with one of its endpoint nodes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExpandedGraph {
    pub vertices: BTreeSet<ElementId>,
    pub kinds: BTreeMap<ElementId, ElementKind>,
    pub adjacency: BTreeMap<ElementId, BTreeSet<ElementId>>,
}

impl ExpandedGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Undirected edges as `(node, link)` pairs, sorted.
    pub fn edges(&self) -> Vec<(ElementId, ElementId)> {
        let mut out = Vec::new();
        for (v, ns) in &self.adjacency {
            if self.kinds.get(v) == Some(&ElementKind::Node) {
                for w in ns {
                    out.push((v.clone(), w.clone()));
                }
            }
        }
        out
    }

    /// Ordered adjacent pairs `(v, w)`, sorted.
    pub fn arcs(&self) -> Vec<(ElementId, ElementId)> {
        let mut out = Vec::new();
        for (v, ns) in &self.adjacency {
            for w in ns {
                out.push((v.clone(), w.clone()));
            }
        }
        out
    }

    pub fn neighbors(&self, v: &ElementId) -> impl Iterator<Item = &ElementId> {
        self.adjacency.get(v).into_iter().flatten()
    }

    pub fn are_adjacent(&self, v: &ElementId, w: &ElementId) -> bool {
        self.adjacency.get(v).is_some_and(|n| n.contains(w))
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let mut seen = BTreeSet::new();
        let mut count = 0;
        for start in &self.vertices {
            if !seen.insert(start.clone()) {
                continue;
            }
            count += 1;
            let mut stack = vec![start.clone()];
            while let Some(v) = stack.pop() {
                for w in self.neighbors(&v) {
                    if seen.insert(w.clone()) {
                        stack.push(w.clone());
                    }
                }
            }
        }
        count
    }

    /// The graph seen as elements again: link-vertices keep their endpoints.
    pub fn to_elements(&self, template: &BTreeMap<ElementId, NetworkElement>) -> Vec<NetworkElement> {
        self.vertices
            .iter()
            .filter_map(|v| template.get(v).cloned())
            .map(|mut e| {
                if e.is_link() {
                    e.endpoints = self.neighbors(&e.id).cloned().collect();
                }
                e
            })
            .collect()
    }
}

/// Replaces every link with a vertex adjacent to each of its endpoints.
pub fn expand_links<'a>(
    elements: impl IntoIterator<Item = &'a NetworkElement>,
) -> Result<ExpandedGraph, ModelError> {
    let elements: BTreeMap<&ElementId, &NetworkElement> =
        elements.into_iter().map(|e| (&e.id, e)).collect();
    let mut graph = ExpandedGraph::default();
    for (id, e) in &elements {
        graph.vertices.insert((*id).clone());
        graph.kinds.insert((*id).clone(), e.kind);
        graph.adjacency.entry((*id).clone()).or_default();
    }
    for (id, e) in &elements {
        if !e.is_link() {
            continue;
        }
        for ep in &e.endpoints {
            match elements.get(ep) {
                Some(n) if n.is_node() => {}
                _ => {
                    return Err(ModelError::DanglingEndpoint {
                        link: id.to_string(),
                        missing: ep.to_string(),
                    })
                }
            }
            graph
                .adjacency
                .get_mut(*id)
                .expect("vertex inserted above")
                .insert(ep.clone());
            graph
                .adjacency
                .get_mut(ep)
                .expect("endpoint checked above")
                .insert((*id).clone());
        }
    }
    Ok(graph)
}

/// All unordered endpoint pairs of a link, oriented by id order.
pub fn expand_flows(link: &NetworkElement) -> Result<Vec<Flow>, ModelError> {
    let endpoints: BTreeSet<&ElementId> = link.endpoints.iter().collect();
    if endpoints.len() < 2 {
        return Err(ModelError::TooFewEndpoints {
            link: link.id.to_string(),
            found: endpoints.len(),
        });
    }
    let endpoints: Vec<&ElementId> = endpoints.into_iter().collect();
    let mut flows = Vec::with_capacity(endpoints.len() * (endpoints.len() - 1) / 2);
    for (i, a) in endpoints.iter().enumerate() {
        for b in &endpoints[i + 1..] {
            flows.push(Flow {
                link: link.id.clone(),
                source: (*a).clone(),
                sink: (*b).clone(),
            });
        }
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::types::NetworkElement as NE;

    fn bfs_distance(g: &ExpandedGraph, from: &str, to: &str) -> Option<usize> {
        let mut dist = BTreeMap::new();
        let mut queue = std::collections::VecDeque::new();
        dist.insert(ElementId::new(from), 0usize);
        queue.push_back(ElementId::new(from));
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            for w in g.neighbors(&v) {
                if !dist.contains_key(w) {
                    dist.insert(w.clone(), d + 1);
                    queue.push_back(w.clone());
                }
            }
        }
        dist.get(&ElementId::new(to)).copied()
    }

    #[test]
    fn point_to_point_link() {
        let els = [
            NE::substrate_node("a"),
            NE::substrate_node("b"),
            NE::substrate_link("l", &["a", "b"]),
        ];
        let g = expand_links(&els).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn broadcast_link() {
        let els = [
            NE::substrate_node("a"),
            NE::substrate_node("b"),
            NE::substrate_node("c"),
            NE::substrate_link("hub", &["a", "b", "c"]),
        ];
        let g = expand_links(&els).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 3);
        assert!(!g.are_adjacent(&"a".into(), &"b".into()));
    }

    #[test]
    fn path_distance() {
        let els = [
            NE::substrate_node("A"),
            NE::substrate_node("B"),
            NE::substrate_node("C"),
            NE::substrate_link("l1", &["A", "B"]),
            NE::substrate_link("l2", &["B", "C"]),
        ];
        let g = expand_links(&els).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(bfs_distance(&g, "A", "C"), Some(4));
        assert_eq!(g.arcs().len(), 8);
    }

    #[test]
    fn dangling_endpoint_is_named() {
        let els = [NE::substrate_node("a"), NE::substrate_link("l", &["a", "x"])];
        let err = expand_links(&els).unwrap_err();
        assert_eq!(
            err,
            ModelError::DanglingEndpoint {
                link: "l".into(),
                missing: "x".into()
            }
        );
    }

    #[test]
    fn expansion_is_idempotent() {
        let els: BTreeMap<ElementId, NE> = [
            NE::substrate_node("a"),
            NE::substrate_node("b"),
            NE::substrate_node("c"),
            NE::substrate_link("l", &["a", "b", "c"]),
            NE::substrate_link("m", &["c", "a"]),
        ]
        .into_iter()
        .map(|e| (e.id.clone(), e))
        .collect();
        let once = expand_links(els.values()).unwrap();
        let again = expand_links(&once.to_elements(&els)).unwrap();
        assert_eq!(once, again);
    }

    #[test]
    fn flows_of_two_endpoints() {
        let l = NE::virtual_link("e", &["b", "a"]);
        let flows = expand_flows(&l).unwrap();
        assert_eq!(flows.len(), 1);
        assert_eq!(flows[0].source.as_str(), "a");
        assert_eq!(flows[0].sink.as_str(), "b");
    }

    #[test]
    fn flows_of_three_and_four_endpoints() {
        let three = expand_flows(&NE::virtual_link("e", &["a", "b", "c"])).unwrap();
        let pairs: Vec<(String, String)> = three
            .iter()
            .map(|f| (f.source.0.clone(), f.sink.0.clone()))
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("a".into(), "b".into()),
                ("a".into(), "c".into()),
                ("b".into(), "c".into())
            ]
        );
        assert_eq!(
            expand_flows(&NE::virtual_link("e", &["a", "b", "c", "d"]))
                .unwrap()
                .len(),
            6
        );
    }

    #[test]
    fn single_endpoint_link_is_rejected() {
        let err = expand_flows(&NE::virtual_link("e", &["a", "a"])).unwrap_err();
        assert!(matches!(err, ModelError::TooFewEndpoints { found: 1, .. }));
    }

    proptest::proptest! {
        #[test]
        fn flow_count_is_binomial(k in 2usize..9) {
            let names: Vec<String> = (0..k).map(|i| format!("n{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let flows = expand_flows(&NE::virtual_link("e", &refs)).unwrap();
            proptest::prop_assert_eq!(flows.len(), k * (k - 1) / 2);
        }
    }
}
