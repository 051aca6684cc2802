//! JSON documents for problems, substrates and requests.
//!
//! Identifiers are strings and quantities are numbers. Tuple-keyed matrices
//! are written as lists of entries so that the files stay readable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::DocError;

use super::expand::expand_links;
use super::types::*;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceDoc {
    pub id: String,
    pub path: String,
    pub class: ResourceClass,
    /// `null` or absent for unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_alloc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropDoc {
    #[serde(rename = "virtual")]
    pub virtual_resource: String,
    #[serde(rename = "substrate")]
    pub substrate_resource: String,
    pub factor: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub endpoints: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capacities: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceDoc {
    pub from: String,
    pub to: String,
    pub resource: String,
    pub capacity: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstrateDoc {
    #[serde(default)]
    pub nodes: Vec<ElementDoc>,
    #[serde(default)]
    pub links: Vec<ElementDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interface_capacities: Vec<InterfaceDoc>,
    /// Applied in both directions on every node/link incidence without an
    /// explicit interface entry.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub default_interface_capacity: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestEntryDoc {
    pub resource: String,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualElementDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub endpoints: Vec<String>,
    #[serde(default)]
    pub requests: Vec<RequestEntryDoc>,
    /// Explicit `(source, sink)` pairs; defaults to all endpoint pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestDoc {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub nodes: Vec<VirtualElementDoc>,
    #[serde(default)]
    pub links: Vec<VirtualElementDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    #[serde(rename = "virtual")]
    pub virtual_element: String,
    pub substrate: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairValueDoc {
    #[serde(rename = "virtual")]
    pub virtual_element: String,
    pub substrate: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementValueDoc {
    #[serde(rename = "virtual")]
    pub virtual_element: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoliciesDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suit: Vec<PairValueDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight: Vec<PairValueDoc>,
    /// Shorthand for a singleton suit row.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<PairDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrationDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub old: Vec<PairDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub penalty: Vec<ElementValueDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transit: Vec<PairValueDoc>,
}

/// Resource catalog, scaling factors and substrate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub resources: Vec<ResourceDoc>,
    #[serde(default)]
    pub prop: Vec<PropDoc>,
    pub substrate: SubstrateDoc,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub resources: Vec<ResourceDoc>,
    #[serde(default)]
    pub prop: Vec<PropDoc>,
    pub substrate: SubstrateDoc,
    pub request: RequestDoc,
    #[serde(default)]
    pub policies: PoliciesDoc,
    #[serde(default)]
    pub migration: MigrationDoc,
    #[serde(default)]
    pub objective: ObjectiveConfig,
}

/// A request together with its placement policies, as submitted for embedding.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestFileDoc {
    pub request: RequestDoc,
    #[serde(default)]
    pub policies: PoliciesDoc,
}

impl ResourceDoc {
    pub fn to_resource(&self) -> ResourceType {
        let (load_weight, min_alloc) = match self.class {
            ResourceClass::Virtual => (self.load_weight.unwrap_or(1.0), self.min_alloc.unwrap_or(0.0)),
            ResourceClass::Substrate => (self.load_weight.unwrap_or(1.0), self.min_alloc.unwrap_or(0.0)),
        };
        ResourceType {
            id: ResourceId::new(self.id.clone()),
            attribute_path: self.path.clone(),
            class: self.class,
            shared_capacity: match self.shared_capacity {
                Some(c) => Capacity::Bounded(c),
                None => Capacity::Unbounded,
            },
            load_weight,
            min_alloc,
        }
    }

    pub fn from_resource(r: &ResourceType) -> Self {
        ResourceDoc {
            id: r.id.0.clone(),
            path: r.attribute_path.clone(),
            class: r.class,
            shared_capacity: r.shared_capacity.bounded(),
            load_weight: (r.class == ResourceClass::Substrate).then_some(r.load_weight),
            min_alloc: (r.class == ResourceClass::Virtual).then_some(r.min_alloc),
        }
    }
}

impl NetworkDoc {
    pub fn to_substrate(&self) -> Result<SubstrateGraph, DocError> {
        let mut ids = std::collections::BTreeSet::new();
        for r in &self.resources {
            if !ids.insert(&r.id) {
                return Err(DocError::Invalid(format!("resource `{}` is declared twice", r.id)));
            }
        }
        let catalog = ResourceCatalog::new(self.resources.iter().map(ResourceDoc::to_resource));
        let mut s = SubstrateGraph::new(catalog);
        for p in &self.prop {
            s.set_prop(&p.virtual_resource, &p.substrate_resource, p.factor);
        }
        for (kind, docs) in [
            (ElementKind::Node, &self.substrate.nodes),
            (ElementKind::Link, &self.substrate.links),
        ] {
            for d in docs {
                let id = ElementId::new(d.id.clone());
                if s.elements.contains_key(&id) {
                    return Err(DocError::Invalid(format!("substrate element `{}` is declared twice", d.id)));
                }
                if kind == ElementKind::Node && !d.endpoints.is_empty() {
                    return Err(DocError::Invalid(format!("substrate node `{}` has endpoints", d.id)));
                }
                s.add_element(NetworkElement {
                    id,
                    kind,
                    layer: Layer::Substrate,
                    endpoints: d.endpoints.iter().map(|e| ElementId::new(e.clone())).collect(),
                    capacities: d
                        .capacities
                        .iter()
                        .map(|(r, c)| (ResourceId::new(r.clone()), *c))
                        .collect(),
                    requests: BTreeMap::new(),
                });
            }
        }
        if !self.substrate.default_interface_capacity.is_empty() {
            let graph = expand_links(s.elements.values())?;
            for (v, w) in graph.arcs() {
                for (r, c) in &self.substrate.default_interface_capacity {
                    s.interface_capacities
                        .insert((v.clone(), w.clone(), ResourceId::new(r.clone())), *c);
                }
            }
        }
        for i in &self.substrate.interface_capacities {
            s.set_interface(&i.from, &i.to, &i.resource, i.capacity);
        }
        Ok(s)
    }

    pub fn from_substrate(s: &SubstrateGraph) -> Self {
        let element_doc = |e: &NetworkElement| ElementDoc {
            id: e.id.0.clone(),
            endpoints: e.endpoints.iter().map(|x| x.0.clone()).collect(),
            capacities: e.capacities.iter().map(|(r, c)| (r.0.clone(), *c)).collect(),
        };
        NetworkDoc {
            resources: s.resources.resources.values().map(ResourceDoc::from_resource).collect(),
            prop: s
                .prop
                .iter()
                .map(|((v, r), f)| PropDoc {
                    virtual_resource: v.0.clone(),
                    substrate_resource: r.0.clone(),
                    factor: *f,
                })
                .collect(),
            substrate: SubstrateDoc {
                nodes: s.elements.values().filter(|e| e.is_node()).map(element_doc).collect(),
                links: s.elements.values().filter(|e| e.is_link()).map(element_doc).collect(),
                interface_capacities: s
                    .interface_capacities
                    .iter()
                    .map(|((v, w, r), c)| InterfaceDoc {
                        from: v.0.clone(),
                        to: w.0.clone(),
                        resource: r.0.clone(),
                        capacity: *c,
                    })
                    .collect(),
                default_interface_capacity: BTreeMap::new(),
            },
        }
    }
}

impl RequestDoc {
    pub fn to_request(&self) -> Result<VirtualRequest, DocError> {
        let mut req = VirtualRequest::new(&self.id);
        for (kind, docs) in [
            (ElementKind::Node, &self.nodes),
            (ElementKind::Link, &self.links),
        ] {
            for d in docs {
                let id = ElementId::new(d.id.clone());
                if req.elements.contains_key(&id) {
                    return Err(DocError::Invalid(format!("virtual element `{}` is declared twice", d.id)));
                }
                let mut requests = BTreeMap::new();
                for r in &d.requests {
                    if requests
                        .insert((ResourceId::new(r.resource.clone()), r.value_type), r.value)
                        .is_some()
                    {
                        return Err(DocError::Invalid(format!(
                            "`{}` requests `{}` ({}) twice",
                            d.id, r.resource, r.value_type
                        )));
                    }
                }
                let element = NetworkElement {
                    id: id.clone(),
                    kind,
                    layer: Layer::Virtual,
                    endpoints: d.endpoints.iter().map(|e| ElementId::new(e.clone())).collect(),
                    capacities: BTreeMap::new(),
                    requests,
                };
                if let Some(flows) = &d.flows {
                    req.flows.insert(
                        id.clone(),
                        flows
                            .iter()
                            .map(|(a, b)| Flow {
                                link: id.clone(),
                                source: ElementId::new(a.clone()),
                                sink: ElementId::new(b.clone()),
                            })
                            .collect(),
                    );
                }
                req.add_element(element);
            }
        }
        req.expand_missing_flows()?;
        Ok(req)
    }

    pub fn from_request(r: &VirtualRequest) -> Self {
        let doc = |e: &NetworkElement| VirtualElementDoc {
            id: e.id.0.clone(),
            endpoints: e.endpoints.iter().map(|x| x.0.clone()).collect(),
            requests: e
                .requests
                .iter()
                .map(|((res, vt), v)| RequestEntryDoc {
                    resource: res.0.clone(),
                    value_type: *vt,
                    value: *v,
                })
                .collect(),
            flows: e.is_link().then(|| {
                r.flows_of(&e.id)
                    .iter()
                    .map(|f| (f.source.0.clone(), f.sink.0.clone()))
                    .collect()
            }),
        };
        RequestDoc {
            id: r.id.clone(),
            nodes: r.nodes().map(doc).collect(),
            links: r.links().map(doc).collect(),
        }
    }
}

impl PoliciesDoc {
    pub fn to_policies(&self, substrate: &SubstrateGraph) -> PolicyMatrices {
        let mut p = PolicyMatrices::default();
        for f in &self.fixed {
            p.fix(
                &ElementId::new(f.virtual_element.clone()),
                &ElementId::new(f.substrate.clone()),
                substrate,
            );
        }
        for s in &self.suit {
            p.set_suit(&s.virtual_element, &s.substrate, s.value != 0.0);
        }
        for w in &self.weight {
            p.set_weight(&w.virtual_element, &w.substrate, w.value);
        }
        p
    }

    pub fn from_policies(p: &PolicyMatrices) -> Self {
        PoliciesDoc {
            suit: p
                .suit
                .iter()
                .map(|((u, v), s)| PairValueDoc {
                    virtual_element: u.0.clone(),
                    substrate: v.0.clone(),
                    value: if *s { 1.0 } else { 0.0 },
                })
                .collect(),
            weight: p
                .weight
                .iter()
                .map(|((u, v), w)| PairValueDoc {
                    virtual_element: u.0.clone(),
                    substrate: v.0.clone(),
                    value: *w,
                })
                .collect(),
            fixed: Vec::new(),
        }
    }
}

impl MigrationDoc {
    pub fn to_migration(&self) -> MigrationContext {
        MigrationContext {
            old: self
                .old
                .iter()
                .map(|p| (ElementId::new(p.virtual_element.clone()), ElementId::new(p.substrate.clone())))
                .collect(),
            penalty: self
                .penalty
                .iter()
                .map(|p| (ElementId::new(p.virtual_element.clone()), p.value))
                .collect(),
            transit: self
                .transit
                .iter()
                .map(|t| {
                    (
                        (ElementId::new(t.virtual_element.clone()), ElementId::new(t.substrate.clone())),
                        t.value,
                    )
                })
                .collect(),
        }
    }

    pub fn from_migration(m: &MigrationContext) -> Self {
        MigrationDoc {
            old: m
                .old
                .iter()
                .map(|(u, v)| PairDoc {
                    virtual_element: u.0.clone(),
                    substrate: v.0.clone(),
                })
                .collect(),
            penalty: m
                .penalty
                .iter()
                .map(|(u, p)| ElementValueDoc {
                    virtual_element: u.0.clone(),
                    value: *p,
                })
                .collect(),
            transit: m
                .transit
                .iter()
                .map(|((u, v), t)| PairValueDoc {
                    virtual_element: u.0.clone(),
                    substrate: v.0.clone(),
                    value: *t,
                })
                .collect(),
        }
    }
}

impl ProblemDoc {
    pub fn network(&self) -> NetworkDoc {
        NetworkDoc {
            resources: self.resources.clone(),
            prop: self.prop.clone(),
            substrate: self.substrate.clone(),
        }
    }

    pub fn to_problem(&self) -> Result<EmbeddingProblem, DocError> {
        let substrate = self.network().to_substrate()?;
        let request = self.request.to_request()?;
        let policies = self.policies.to_policies(&substrate);
        Ok(EmbeddingProblem {
            substrate,
            request,
            policies,
            migration: self.migration.to_migration(),
            objective: self.objective,
        })
    }

    pub fn from_problem(p: &EmbeddingProblem) -> Self {
        let net = NetworkDoc::from_substrate(&p.substrate);
        ProblemDoc {
            resources: net.resources,
            prop: net.prop,
            substrate: net.substrate,
            request: RequestDoc::from_request(&p.request),
            policies: PoliciesDoc::from_policies(&p.policies),
            migration: MigrationDoc::from_migration(&p.migration),
            objective: p.objective,
        }
    }

    pub fn parse(text: &str) -> Result<Self, DocError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
      "resources": [
        {"id": "slots_v", "path": "/node/slots", "class": "virtual"},
        {"id": "slots", "path": "/node/slots", "class": "substrate"},
        {"id": "bw_v", "path": "/link/symmetric/bandwidth", "class": "virtual"},
        {"id": "bw", "path": "/link/symmetric/bandwidth", "class": "substrate"}
      ],
      "prop": [
        {"virtual": "slots_v", "substrate": "slots", "factor": 1},
        {"virtual": "bw_v", "substrate": "bw", "factor": 1}
      ],
      "substrate": {
        "nodes": [{"id": "A", "capacities": {"slots": 2, "bw": 10}},
                  {"id": "B", "capacities": {"slots": 2, "bw": 10}}],
        "links": [{"id": "A-B", "endpoints": ["A", "B"], "capacities": {"bw": 10}}],
        "default_interface_capacity": {"bw": 10},
        "interface_capacities": [{"from": "A", "to": "A-B", "resource": "bw", "capacity": 4}]
      },
      "request": {
        "id": "r1",
        "nodes": [{"id": "x", "requests": [{"resource": "slots_v", "type": "constant", "value": 1}]},
                  {"id": "y", "requests": [{"resource": "slots_v", "type": "constant", "value": 1}]}],
        "links": [{"id": "x-y", "endpoints": ["x", "y"],
                   "requests": [{"resource": "bw_v", "type": "minimum", "value": 2}]}]
      },
      "policies": {"fixed": [{"virtual": "x", "substrate": "A"}]}
    }"#;

    #[test]
    fn parses_sample_problem() {
        let p = ProblemDoc::parse(SAMPLE).unwrap().to_problem().unwrap();
        assert_eq!(p.substrate.elements.len(), 3);
        assert_eq!(p.substrate.interface_capacities.len(), 4);
        assert_eq!(
            p.substrate
                .interface_capacity(&"A".into(), &"A-B".into(), &"bw".into()),
            4.0
        );
        assert_eq!(p.request.flows_of(&"x-y".into()).len(), 1);
        assert!(!p.policies.suit(&"x".into(), &"B".into()));
        assert!(p.policies.suit(&"y".into(), &"B".into()));
        assert!(crate::network::validate_problem(&p).is_empty());
    }

    #[test]
    fn problem_survives_document_round_trip() {
        let p = ProblemDoc::parse(SAMPLE).unwrap().to_problem().unwrap();
        let text = serde_json::to_string(&ProblemDoc::from_problem(&p)).unwrap();
        let again = ProblemDoc::parse(&text).unwrap().to_problem().unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = SAMPLE.replace("\"policies\"", "\"policy\"");
        assert!(ProblemDoc::parse(&bad).is_err());
    }
}
