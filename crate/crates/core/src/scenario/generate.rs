use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::DocError;
use crate::network::{ElementId, NetworkElement, PolicyMatrices, SubstrateGraph, ValueType, VirtualRequest};

use super::topology::{random_walk, BW_V, SLOTS_V};
use super::ScenarioConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedRequest {
    pub request: VirtualRequest,
    pub policies: PolicyMatrices,
    /// Access points and their fixed hosts.
    pub access_points: BTreeMap<ElementId, ElementId>,
    pub cloud_nodes: BTreeSet<ElementId>,
}

fn substrate_adjacency(s: &SubstrateGraph) -> BTreeMap<&str, Vec<&str>> {
    let mut adj: BTreeMap<&str, Vec<&str>> =
        s.elements.values().filter(|e| e.is_node()).map(|e| (e.id.as_str(), Vec::new())).collect();
    for l in s.elements.values().filter(|e| e.is_link()) {
        for a in &l.endpoints {
            for b in &l.endpoints {
                if a != b {
                    adj.get_mut(a.as_str()).expect("endpoint").push(b.as_str());
                }
            }
        }
    }
    adj
}

/// Samples a request whose topology is a connected piece of the substrate.
/// Access points are pinned to the substrate node they were sampled from;
/// cloud nodes may go to any substrate node.
pub fn generate_request(
    config: &ScenarioConfig,
    substrate: &SubstrateGraph,
    id: &str,
    rng: &mut impl Rng,
) -> Result<GeneratedRequest, DocError> {
    let (cr, ap) = match config.fixed_freedom() {
        None => (
            rng.gen_range(config.cr_range.0..=config.cr_range.1),
            rng.gen_range(config.ap_range.0..=config.ap_range.1),
        ),
        Some(f) => {
            let lo = (config.cr_range.0 + config.ap_range.0).max(1);
            let hi = config.cr_range.1 + config.ap_range.1;
            let n = rng.gen_range(lo..=hi);
            let cr = (f * n as f64).round() as usize;
            (cr, n - cr)
        }
    };
    let n = cr + ap;
    let adj = substrate_adjacency(substrate);
    if n > adj.len() {
        return Err(DocError::Invalid(format!(
            "request of {n} nodes exceeds the {} substrate nodes",
            adj.len()
        )));
    }
    let walk = random_walk(&adj, n, rng)
        .ok_or_else(|| DocError::Invalid(format!("no connected substrate piece of {n} nodes")))?;
    let mut roles: Vec<bool> = (0..n).map(|i| i < cr).collect();
    roles.shuffle(rng);

    let mut request = VirtualRequest::new(id);
    let mut policies = PolicyMatrices::default();
    let mut access_points = BTreeMap::new();
    let mut cloud_nodes = BTreeSet::new();
    let name = |k: usize| format!("v{k}");
    let position: BTreeMap<&str, usize> = walk.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    for (k, (&at, &flexible)) in walk.iter().zip(&roles).enumerate() {
        let u = ElementId::new(name(k));
        request.add_element(NetworkElement::virtual_node(&u.0).with_request(SLOTS_V, ValueType::Constant, 1.0));
        if flexible {
            for e in substrate.elements.values().filter(|e| e.is_link()) {
                policies.suit.insert((u.clone(), e.id.clone()), false);
            }
            cloud_nodes.insert(u);
        } else {
            let host = ElementId::new(at);
            policies.fix(&u, &host, substrate);
            access_points.insert(u, host);
        }
    }
    let mut links = BTreeSet::new();
    for &v in &walk {
        for &w in &adj[v] {
            if let (Some(&a), Some(&b)) = (position.get(v), position.get(w)) {
                if a < b {
                    links.insert((a, b));
                }
            }
        }
    }
    for (a, b) in links {
        let (x, y) = (name(a), name(b));
        request.add_element(
            NetworkElement::virtual_link(&format!("{x}_{y}"), &[&x, &y]).with_request(BW_V, ValueType::Constant, 1.0),
        );
    }
    request.expand_missing_flows()?;
    Ok(GeneratedRequest {
        request,
        policies,
        access_points,
        cloud_nodes,
    })
}
