use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a network element (virtual or substrate, node or link).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub String);

/// Identifier of a resource type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub String);

impl ElementId {
    pub fn new(s: impl Into<String>) -> Self {
        ElementId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl ResourceId {
    pub fn new(s: impl Into<String>) -> Self {
        ResourceId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementId {
    fn from(s: &str) -> Self {
        ElementId(s.to_string())
    }
}

impl From<&str> for ResourceId {
    fn from(s: &str) -> Self {
        ResourceId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceClass {
    Virtual,
    #[default]
    Substrate,
}

/// Shared capacity of a substrate resource (`cap(r_S)`).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Capacity {
    Bounded(f64),
    #[default]
    Unbounded,
}

impl Capacity {
    pub fn bounded(self) -> Option<f64> {
        match self {
            Capacity::Bounded(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResourceType {
    pub id: ResourceId,
    pub attribute_path: String,
    pub class: ResourceClass,
    pub shared_capacity: Capacity,
    /// Weight of this resource in the load objective; 1 for virtual resources.
    pub load_weight: f64,
    /// Minimal allocation unit; 0 for substrate resources.
    pub min_alloc: f64,
}

impl ResourceType {
    pub fn virtual_resource(id: &str, path: &str, min_alloc: f64) -> Self {
        ResourceType {
            id: ResourceId::new(id),
            attribute_path: path.to_string(),
            class: ResourceClass::Virtual,
            shared_capacity: Capacity::Unbounded,
            load_weight: 1.0,
            min_alloc,
        }
    }

    pub fn substrate_resource(id: &str, path: &str, load_weight: f64) -> Self {
        ResourceType {
            id: ResourceId::new(id),
            attribute_path: path.to_string(),
            class: ResourceClass::Substrate,
            shared_capacity: Capacity::Unbounded,
            load_weight,
            min_alloc: 0.0,
        }
    }

    pub fn with_shared_capacity(mut self, cap: f64) -> Self {
        self.shared_capacity = Capacity::Bounded(cap);
        self
    }

    /// Shared channels carry a single symmetric resource for both directions.
    pub fn is_half_duplex(&self) -> bool {
        self.attribute_path.contains("/symmetric/")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Node,
    Link,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Virtual,
    Substrate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Minimum,
    Maximum,
    Constant,
}

impl ValueType {
    pub const ALL: [ValueType; 3] = [ValueType::Minimum, ValueType::Maximum, ValueType::Constant];
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Minimum => "minimum",
            ValueType::Maximum => "maximum",
            ValueType::Constant => "constant",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkElement {
    pub id: ElementId,
    pub kind: ElementKind,
    pub layer: Layer,
    /// Endpoint node ids; empty for nodes.
    pub endpoints: Vec<ElementId>,
    /// Substrate capacities `cap_{r_S}(v)`.
    pub capacities: BTreeMap<ResourceId, f64>,
    /// Virtual requests `req(u, r_V, s)`.
    pub requests: BTreeMap<(ResourceId, ValueType), f64>,
}

impl NetworkElement {
    pub fn substrate_node(id: &str) -> Self {
        NetworkElement {
            id: ElementId::new(id),
            kind: ElementKind::Node,
            layer: Layer::Substrate,
            endpoints: Vec::new(),
            capacities: BTreeMap::new(),
            requests: BTreeMap::new(),
        }
    }

    pub fn substrate_link(id: &str, endpoints: &[&str]) -> Self {
        NetworkElement {
            id: ElementId::new(id),
            kind: ElementKind::Link,
            layer: Layer::Substrate,
            endpoints: endpoints.iter().map(|e| ElementId::new(*e)).collect(),
            capacities: BTreeMap::new(),
            requests: BTreeMap::new(),
        }
    }

    pub fn virtual_node(id: &str) -> Self {
        NetworkElement {
            layer: Layer::Virtual,
            ..Self::substrate_node(id)
        }
    }

    pub fn virtual_link(id: &str, endpoints: &[&str]) -> Self {
        NetworkElement {
            layer: Layer::Virtual,
            ..Self::substrate_link(id, endpoints)
        }
    }

    pub fn with_capacity(mut self, resource: &str, amount: f64) -> Self {
        self.capacities.insert(ResourceId::new(resource), amount);
        self
    }

    pub fn with_request(mut self, resource: &str, value_type: ValueType, amount: f64) -> Self {
        self.requests
            .insert((ResourceId::new(resource), value_type), amount);
        self
    }

    pub fn is_node(&self) -> bool {
        self.kind == ElementKind::Node
    }

    pub fn is_link(&self) -> bool {
        self.kind == ElementKind::Link
    }

    pub fn capacity(&self, resource: &ResourceId) -> f64 {
        self.capacities.get(resource).copied().unwrap_or(0.0)
    }

    pub fn request(&self, resource: &ResourceId, value_type: ValueType) -> Option<f64> {
        self.requests.get(&(resource.clone(), value_type)).copied()
    }

    /// Virtual resources this element requests, in id order.
    pub fn requested_resources(&self) -> BTreeSet<ResourceId> {
        self.requests.keys().map(|(r, _)| r.clone()).collect()
    }
}

/// One source/sink commodity of a virtual link.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flow {
    pub link: ElementId,
    pub source: ElementId,
    pub sink: ElementId,
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}>{}", self.link, self.source, self.sink)
    }
}

/// Resource catalog shared by the substrate and the requests it hosts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResourceCatalog {
    pub resources: BTreeMap<ResourceId, ResourceType>,
}

impl ResourceCatalog {
    pub fn new(resources: impl IntoIterator<Item = ResourceType>) -> Self {
        ResourceCatalog {
            resources: resources.into_iter().map(|r| (r.id.clone(), r)).collect(),
        }
    }

    pub fn get(&self, id: &ResourceId) -> Option<&ResourceType> {
        self.resources.get(id)
    }

    pub fn of_class(&self, class: ResourceClass) -> impl Iterator<Item = &ResourceType> {
        self.resources.values().filter(move |r| r.class == class)
    }

    pub fn min_alloc(&self, id: &ResourceId) -> f64 {
        self.get(id).map(|r| r.min_alloc).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SubstrateGraph {
    pub resources: ResourceCatalog,
    pub elements: BTreeMap<ElementId, NetworkElement>,
    /// `cap_{r_S}(v, w)` over ordered adjacent pairs of the expanded graph.
    pub interface_capacities: BTreeMap<(ElementId, ElementId, ResourceId), f64>,
    /// `prop(r_V, r_S)`; absent pairs are 0.
    pub prop: BTreeMap<(ResourceId, ResourceId), f64>,
}

impl SubstrateGraph {
    pub fn new(resources: ResourceCatalog) -> Self {
        SubstrateGraph {
            resources,
            ..Default::default()
        }
    }

    pub fn add_element(&mut self, element: NetworkElement) {
        self.elements.insert(element.id.clone(), element);
    }

    pub fn set_prop(&mut self, virtual_res: &str, substrate_res: &str, factor: f64) {
        self.prop.insert(
            (ResourceId::new(virtual_res), ResourceId::new(substrate_res)),
            factor,
        );
    }

    pub fn set_interface(&mut self, from: &str, to: &str, resource: &str, cap: f64) {
        self.interface_capacities.insert(
            (ElementId::new(from), ElementId::new(to), ResourceId::new(resource)),
            cap,
        );
    }

    /// Sets the interface capacity in both directions between a node and a link.
    pub fn set_interface_both(&mut self, a: &str, b: &str, resource: &str, cap: f64) {
        self.set_interface(a, b, resource, cap);
        self.set_interface(b, a, resource, cap);
    }

    pub fn prop(&self, virtual_res: &ResourceId, substrate_res: &ResourceId) -> f64 {
        self.prop
            .get(&(virtual_res.clone(), substrate_res.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Substrate resources with a positive scaling factor for `virtual_res`.
    pub fn hosts_of(&self, virtual_res: &ResourceId) -> Vec<(ResourceId, f64)> {
        self.prop
            .iter()
            .filter(|((v, _), p)| v == virtual_res && **p > 0.0)
            .map(|((_, s), p)| (s.clone(), *p))
            .collect()
    }

    pub fn interface_capacity(&self, from: &ElementId, to: &ElementId, resource: &ResourceId) -> f64 {
        self.interface_capacities
            .get(&(from.clone(), to.clone(), resource.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn element_capacity(&self, element: &ElementId, resource: &ResourceId) -> f64 {
        self.elements
            .get(element)
            .map(|e| e.capacity(resource))
            .unwrap_or(0.0)
    }

    pub fn substrate_resources(&self) -> Vec<&ResourceType> {
        self.resources.of_class(ResourceClass::Substrate).collect()
    }

    /// `cap(r_S)` used to normalize loads: the shared capacity when bounded,
    /// otherwise the sum of element capacities.
    pub fn load_capacity(&self, resource: &ResourceType) -> f64 {
        match resource.shared_capacity {
            Capacity::Bounded(c) => c,
            Capacity::Unbounded => self
                .elements
                .values()
                .map(|e| e.capacity(&resource.id))
                .sum(),
        }
    }
}

/// Virtual network request (one CloudNet).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VirtualRequest {
    pub id: String,
    pub elements: BTreeMap<ElementId, NetworkElement>,
    /// `Fl(u)` per virtual link.
    pub flows: BTreeMap<ElementId, Vec<Flow>>,
}

impl VirtualRequest {
    pub fn new(id: &str) -> Self {
        VirtualRequest {
            id: id.to_string(),
            ..Default::default()
        }
    }

    pub fn add_element(&mut self, element: NetworkElement) {
        self.elements.insert(element.id.clone(), element);
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NetworkElement> {
        self.elements.values().filter(|e| e.is_node())
    }

    pub fn links(&self) -> impl Iterator<Item = &NetworkElement> {
        self.elements.values().filter(|e| e.is_link())
    }

    pub fn flows_of(&self, link: &ElementId) -> &[Flow] {
        self.flows.get(link).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Fills `flows` for every link without an explicit flow set.
    pub fn expand_missing_flows(&mut self) -> Result<(), crate::error::ModelError> {
        let missing: Vec<ElementId> = self
            .links()
            .filter(|l| !self.flows.contains_key(&l.id))
            .map(|l| l.id.clone())
            .collect();
        for id in missing {
            let flows = super::expand::expand_flows(&self.elements[&id])?;
            self.flows.insert(id, flows);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolicyMatrices {
    /// Explicit `suit(u, v)` entries; absent pairs are suitable.
    pub suit: BTreeMap<(ElementId, ElementId), bool>,
    /// Explicit `weight(u, v)` entries; absent pairs weigh 1.
    pub weight: BTreeMap<(ElementId, ElementId), f64>,
}

impl PolicyMatrices {
    pub fn suit(&self, u: &ElementId, v: &ElementId) -> bool {
        self.suit.get(&(u.clone(), v.clone())).copied().unwrap_or(true)
    }

    pub fn weight(&self, u: &ElementId, v: &ElementId) -> f64 {
        self.weight
            .get(&(u.clone(), v.clone()))
            .copied()
            .unwrap_or(1.0)
    }

    pub fn set_suit(&mut self, u: &str, v: &str, suitable: bool) {
        self.suit
            .insert((ElementId::new(u), ElementId::new(v)), suitable);
    }

    pub fn set_weight(&mut self, u: &str, v: &str, weight: f64) {
        self.weight
            .insert((ElementId::new(u), ElementId::new(v)), weight);
    }

    /// Restricts `u` to exactly one host among `substrate`.
    pub fn fix(&mut self, u: &ElementId, host: &ElementId, substrate: &SubstrateGraph) {
        for v in substrate.elements.keys() {
            self.suit.insert((u.clone(), v.clone()), v == host);
        }
    }
}

/// Penalty applied to nodes without an explicit migration penalty.
pub const DEFAULT_NODE_PENALTY: f64 = 1.0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MigrationContext {
    pub old: BTreeSet<(ElementId, ElementId)>,
    pub penalty: BTreeMap<ElementId, f64>,
    pub transit: BTreeMap<(ElementId, ElementId), f64>,
}

impl MigrationContext {
    pub fn is_empty(&self) -> bool {
        self.old.is_empty()
    }

    pub fn old_hosts(&self, u: &ElementId) -> BTreeSet<ElementId> {
        self.old
            .iter()
            .filter(|(x, _)| x == u)
            .map(|(_, v)| v.clone())
            .collect()
    }

    pub fn was_at(&self, u: &ElementId, v: &ElementId) -> bool {
        self.old.contains(&(u.clone(), v.clone()))
    }

    pub fn transit(&self, u: &ElementId, v: &ElementId) -> f64 {
        self.transit
            .get(&(u.clone(), v.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    /// The link penalty epsilon: `1e-6` times the largest explicit penalty (or 1).
    pub fn epsilon(&self) -> f64 {
        let largest = self
            .penalty
            .values()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let base = if largest.is_finite() && largest > 0.0 {
            largest
        } else {
            1.0
        };
        1e-6 * base
    }

    pub fn penalty(&self, element: &NetworkElement) -> f64 {
        match self.penalty.get(&element.id) {
            Some(p) => *p,
            None if element.is_link() => self.epsilon(),
            None => DEFAULT_NODE_PENALTY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum ObjectiveConfig {
    /// Weighted resource usage plus migration cost.
    #[default]
    ResourceMin,
    /// `c * max_load + sum load(r_S)` plus migration cost.
    LoadBalance { c: f64 },
}


#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingProblem {
    pub substrate: SubstrateGraph,
    pub request: VirtualRequest,
    pub policies: PolicyMatrices,
    pub migration: MigrationContext,
    pub objective: ObjectiveConfig,
}

impl EmbeddingProblem {
    pub fn new(substrate: SubstrateGraph, request: VirtualRequest) -> Self {
        EmbeddingProblem {
            substrate,
            request,
            policies: PolicyMatrices::default(),
            migration: MigrationContext::default(),
            objective: ObjectiveConfig::ResourceMin,
        }
    }

    /// Virtual resources referenced by `u`; for links these form `R_f`.
    pub fn resources_of(&self, u: &ElementId) -> BTreeSet<ResourceId> {
        self.request
            .elements
            .get(u)
            .map(NetworkElement::requested_resources)
            .unwrap_or_default()
    }

    /// Link-vertex capacity fraction used by `relate_f`: `min(min_alloc over R_f, 1)`.
    pub fn flow_epsilon(&self, link: &ElementId) -> f64 {
        self.resources_of(link)
            .iter()
            .map(|r| self.substrate.resources.min_alloc(r))
            .fold(1.0, f64::min)
    }
}
