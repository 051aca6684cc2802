use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::expand::expand_links;
use super::types::{
    EmbeddingProblem, ElementId, Layer, ObjectiveConfig, ResourceClass, ValueType,
};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, msg: String) {
        self.issues.push(msg);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "- {issue}")?;
        }
        Ok(())
    }
}

/// Collects every structural problem that would make the model builder fail
/// or produce a meaningless model.
pub fn validate_problem(problem: &EmbeddingProblem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let substrate = &problem.substrate;
    let catalog = &substrate.resources;

    let mut paths: BTreeSet<(ResourceClass, &str)> = BTreeSet::new();
    for r in catalog.resources.values() {
        if r.attribute_path.is_empty() {
            report.push(format!("resource `{}` has an empty attribute path", r.id));
        } else if !paths.insert((r.class, r.attribute_path.as_str())) {
            report.push(format!(
                "attribute path `{}` is used twice in the same class",
                r.attribute_path
            ));
        }
        if !(0.0..=1.0).contains(&r.load_weight) {
            report.push(format!("load weight of `{}` is outside [0, 1]", r.id));
        }
        if r.min_alloc < 0.0 {
            report.push(format!("min_alloc of `{}` is negative", r.id));
        }
        match r.class {
            ResourceClass::Virtual if r.load_weight != 1.0 => {
                report.push(format!("virtual resource `{}` carries a load weight", r.id))
            }
            ResourceClass::Substrate if r.min_alloc != 0.0 => {
                report.push(format!("substrate resource `{}` carries a min_alloc", r.id))
            }
            _ => {}
        }
        if let Some(c) = r.shared_capacity.bounded() {
            if c < 0.0 {
                report.push(format!("shared capacity of `{}` is negative", r.id));
            }
        }
    }

    for ((rv, rs), p) in &substrate.prop {
        match catalog.get(rv) {
            Some(r) if r.class == ResourceClass::Virtual => {}
            _ => report.push(format!("prop row `{rv}` is not a virtual resource")),
        }
        match catalog.get(rs) {
            Some(r) if r.class == ResourceClass::Substrate => {}
            _ => report.push(format!("prop column `{rs}` is not a substrate resource")),
        }
        if *p < 0.0 || !p.is_finite() {
            report.push(format!("prop({rv}, {rs}) = {p} is not a nonnegative number"));
        }
    }

    for e in substrate.elements.values() {
        if e.layer != Layer::Substrate {
            report.push(format!("substrate element `{}` is marked virtual", e.id));
        }
        if !e.requests.is_empty() {
            report.push(format!("substrate element `{}` carries requests", e.id));
        }
        for (r, c) in &e.capacities {
            match catalog.get(r) {
                Some(rt) if rt.class == ResourceClass::Substrate => {}
                _ => report.push(format!(
                    "capacity of `{}` references unknown substrate resource `{r}`",
                    e.id
                )),
            }
            if *c < 0.0 || !c.is_finite() {
                report.push(format!("capacity of `{}` for `{r}` is negative", e.id));
            }
        }
    }
    let substrate_graph = expand_links(substrate.elements.values());
    check_endpoints(&mut report, substrate.elements.values(), &substrate.elements);
    if let Ok(graph) = &substrate_graph {
        for ((v, w, r), c) in &substrate.interface_capacities {
            if !graph.are_adjacent(v, w) {
                report.push(format!("interface ({v}, {w}) joins elements that are not adjacent"));
            }
            if catalog.get(r).map(|x| x.class) != Some(ResourceClass::Substrate) {
                report.push(format!("interface ({v}, {w}) references unknown resource `{r}`"));
            }
            if *c < 0.0 || !c.is_finite() {
                report.push(format!("interface ({v}, {w}) capacity for `{r}` is negative"));
            }
        }
    }

    let request = &problem.request;
    check_endpoints(&mut report, request.elements.values(), &request.elements);
    let mut used_virtual = BTreeSet::new();
    for e in request.elements.values() {
        if e.layer != Layer::Virtual {
            report.push(format!("request element `{}` is marked substrate", e.id));
        }
        if !e.capacities.is_empty() {
            report.push(format!("virtual element `{}` carries capacities", e.id));
        }
        for ((r, s), amount) in &e.requests {
            match catalog.get(r) {
                Some(rt) if rt.class == ResourceClass::Virtual => {
                    used_virtual.insert(r.clone());
                }
                _ => report.push(format!(
                    "request of `{}` references unknown virtual resource `{r}`",
                    e.id
                )),
            }
            if *amount < 0.0 || !amount.is_finite() {
                report.push(format!("request of `{}` for `{r}` ({s}) is negative", e.id));
            }
            if *s == ValueType::Constant
                && (e.request(r, ValueType::Minimum).is_some()
                    || e.request(r, ValueType::Maximum).is_some())
            {
                report.push(format!(
                    "`{}` combines a constant request for `{r}` with minimum/maximum",
                    e.id
                ));
            }
        }
        if e.is_link() {
            match request.flows.get(&e.id) {
                None => report.push(format!("virtual link `{}` has no flow set", e.id)),
                Some(flows) if flows.is_empty() => {
                    report.push(format!("virtual link `{}` has an empty flow set", e.id))
                }
                Some(flows) => {
                    for f in flows {
                        for end in [&f.source, &f.sink] {
                            if !e.endpoints.contains(end) {
                                report.push(format!(
                                    "flow {f} uses `{end}` which is not an endpoint of `{}`",
                                    e.id
                                ));
                            }
                        }
                        if f.source == f.sink {
                            report.push(format!("flow {f} has identical source and sink"));
                        }
                    }
                }
            }
        }
    }
    for link in request.flows.keys() {
        if !request.elements.get(link).is_some_and(|e| e.is_link()) {
            report.push(format!("flow set given for unknown virtual link `{link}`"));
        }
    }
    for r in &used_virtual {
        if substrate.hosts_of(r).is_empty() {
            report.push(format!("no substrate resource can host {r}"));
        }
    }

    let is_virtual = |u: &ElementId| request.elements.contains_key(u);
    let is_substrate = |v: &ElementId| substrate.elements.contains_key(v);
    for (u, v) in problem.policies.suit.keys() {
        if !is_virtual(u) || !is_substrate(v) {
            report.push(format!("suit({u}, {v}) references an unknown element"));
        }
    }
    for ((u, v), w) in &problem.policies.weight {
        if !is_virtual(u) || !is_substrate(v) {
            report.push(format!("weight({u}, {v}) references an unknown element"));
        }
        if !(0.0..=1.0).contains(w) {
            report.push(format!("weight({u}, {v}) = {w} is outside [0, 1]"));
        }
    }
    for u in request.nodes() {
        if !substrate
            .elements
            .keys()
            .any(|v| problem.policies.suit(&u.id, v))
        {
            report.push(format!("virtual node `{}` has no suitable host", u.id));
        }
    }

    let migration = &problem.migration;
    let mut old_counts: BTreeMap<&ElementId, usize> = BTreeMap::new();
    for (u, v) in &migration.old {
        if !is_virtual(u) || !is_substrate(v) {
            report.push(format!("old({u}, {v}) references an unknown element"));
        }
        *old_counts.entry(u).or_default() += 1;
    }
    for (u, n) in old_counts {
        if request.elements.get(u).is_some_and(|e| e.is_node()) && n != 1 {
            report.push(format!("virtual node `{u}` has {n} old locations"));
        }
    }
    for (u, p) in &migration.penalty {
        if !is_virtual(u) {
            report.push(format!("penalty for unknown element `{u}`"));
        }
        if *p <= 0.0 || !p.is_finite() {
            report.push(format!("penalty({u}) = {p} must be positive"));
        }
    }
    for ((u, v), t) in &migration.transit {
        if !is_virtual(u) || !is_substrate(v) {
            report.push(format!("transit({u}, {v}) references an unknown element"));
        }
        if *t < 0.0 || !t.is_finite() {
            report.push(format!("transit({u}, {v}) = {t} is negative"));
        }
    }

    if let ObjectiveConfig::LoadBalance { c } = problem.objective {
        let sum: f64 = catalog
            .of_class(ResourceClass::Substrate)
            .map(|r| r.load_weight)
            .sum();
        if c < sum {
            report.push(format!(
                "load priority factor c = {c} is below the sum of load weights {sum}"
            ));
        }
    }
    report
}

fn check_endpoints<'a>(
    report: &mut ValidationReport,
    elements: impl Iterator<Item = &'a super::types::NetworkElement>,
    all: &BTreeMap<ElementId, super::types::NetworkElement>,
) {
    for e in elements {
        if !e.is_link() {
            continue;
        }
        if e.endpoints.iter().collect::<BTreeSet<_>>().len() < 2 {
            report.push(format!("link `{}` has fewer than two endpoints", e.id));
        }
        for ep in &e.endpoints {
            match all.get(ep) {
                Some(n) if n.is_node() && n.layer == e.layer => {}
                Some(_) => report.push(format!(
                    "link `{}` endpoint `{ep}` is not a node of the same layer",
                    e.id
                )),
                None => report.push(format!("link `{}` references missing node `{ep}`", e.id)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::types::*;

    pub(crate) fn two_node_problem() -> EmbeddingProblem {
        let catalog = ResourceCatalog::new([
            ResourceType::virtual_resource("cpu_v", "/node/cpu", 0.0),
            ResourceType::substrate_resource("cpu", "/node/cpu", 1.0),
        ]);
        let mut s = SubstrateGraph::new(catalog);
        s.add_element(NetworkElement::substrate_node("A").with_capacity("cpu", 4.0));
        s.add_element(NetworkElement::substrate_node("B").with_capacity("cpu", 4.0));
        s.set_prop("cpu_v", "cpu", 1.0);
        let mut r = VirtualRequest::new("r");
        r.add_element(NetworkElement::virtual_node("x").with_request(
            "cpu_v",
            ValueType::Constant,
            1.0,
        ));
        EmbeddingProblem::new(s, r)
    }

    #[test]
    fn well_formed_problem_is_clean() {
        assert!(validate_problem(&two_node_problem()).is_empty());
    }

    #[test]
    fn missing_prop_route_is_reported() {
        let mut p = two_node_problem();
        p.substrate.prop.clear();
        let report = validate_problem(&p);
        assert!(report
            .issues
            .iter()
            .any(|i| i.contains("no substrate resource can host cpu_v")));
    }

    #[test]
    fn dangling_link_endpoint_is_named() {
        let mut p = two_node_problem();
        p.substrate
            .add_element(NetworkElement::substrate_link("l", &["A", "x"]));
        let report = validate_problem(&p);
        assert!(report.issues.iter().any(|i| i.contains("`x`")), "{report}");
    }

    #[test]
    fn constant_and_minimum_conflict() {
        let mut p = two_node_problem();
        let x = p.request.elements.get_mut(&"x".into()).unwrap();
        x.requests
            .insert(("cpu_v".into(), ValueType::Minimum), 1.0);
        let report = validate_problem(&p);
        assert!(report.issues.iter().any(|i| i.contains("combines a constant")));
    }

    #[test]
    fn node_with_two_old_locations() {
        let mut p = two_node_problem();
        p.migration.old.insert(("x".into(), "A".into()));
        p.migration.old.insert(("x".into(), "B".into()));
        let report = validate_problem(&p);
        assert!(report.issues.iter().any(|i| i.contains("2 old locations")));
    }

    #[test]
    fn load_factor_below_weights() {
        let mut p = two_node_problem();
        p.objective = ObjectiveConfig::LoadBalance { c: 0.5 };
        assert!(!validate_problem(&p).is_empty());
        p.objective = ObjectiveConfig::LoadBalance { c: 1.0 };
        assert!(validate_problem(&p).is_empty());
    }
}
