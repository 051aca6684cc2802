//! Solver-agnostic linear mixed-integer models and the embedding model builder.

mod build;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::network::{ElementId, Flow, ResourceId};

pub use build::{build, BuildReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Integrality {
    Binary,
    Continuous,
}

/// Structured variable key; the model's symbol table maps names to these.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    New { element: ElementId, host: ElementId },
    NewFlow { flow: Flow, host: ElementId },
    Mig { element: ElementId },
    AllocV { element: ElementId, host: ElementId, rv: ResourceId },
    AllocS { element: ElementId, host: ElementId, rv: ResourceId, rs: ResourceId },
    FlowV { flow: Flow, from: ElementId, to: ElementId, rv: ResourceId },
    FlowS { flow: Flow, from: ElementId, to: ElementId, rv: ResourceId, rs: ResourceId },
    Load { rs: ResourceId },
    MaxLoad,
    /// Variables read from a file that carry no embedding meaning.
    External(String),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKey::New { element, host } => write!(f, "new({element},{host})"),
            VarKey::NewFlow { flow, host } => write!(f, "new_f({flow},{host})"),
            VarKey::Mig { element } => write!(f, "mig({element})"),
            VarKey::AllocV { element, host, rv } => write!(f, "alloc_v({element},{host},{rv})"),
            VarKey::AllocS { element, host, rv, rs } => {
                write!(f, "alloc_s({element},{host},{rv},{rs})")
            }
            VarKey::FlowV { flow, from, to, rv } => write!(f, "flow_v({flow},{from},{to},{rv})"),
            VarKey::FlowS { flow, from, to, rv, rs } => {
                write!(f, "flow_s({flow},{from},{to},{rv},{rs})")
            }
            VarKey::Load { rs } => write!(f, "load({rs})"),
            VarKey::MaxLoad => f.write_str("max_load"),
            VarKey::External(name) => f.write_str(name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub key: VarKey,
    pub lower: f64,
    /// `f64::INFINITY` when unbounded.
    pub upper: f64,
    pub integrality: Integrality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }

    /// Amount by which `lhs rel rhs` is violated (0 when satisfied).
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Relation::Le => (lhs - rhs).max(0.0),
            Relation::Ge => (rhs - lhs).max(0.0),
            Relation::Eq => (lhs - rhs).abs(),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// Constraint family tags, one per constraint group of the embedding program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    MapNode,
    SetNew,
    ReqMin,
    ReqMax,
    ReqCon,
    RelateV,
    Allowed,
    NeCapacity,
    Capacity,
    Load,
    MaxLoad,
    Resource,
    FlowRes,
    MapLink,
    MapSrc,
    MapSink,
    ReqFmin,
    ReqFmax,
    ReqFconst,
    ExpOut,
    ExpIn,
    Direction,
    RelateF,
    /// Ties the per-flow footprint `new(f, v)` to the link mapping.
    FlowMap,
    New,
    Migrated,
    /// Rows read from a file.
    External,
}

impl Family {
    pub const ALL: [Family; 27] = [
        Family::MapNode,
        Family::SetNew,
        Family::ReqMin,
        Family::ReqMax,
        Family::ReqCon,
        Family::RelateV,
        Family::Allowed,
        Family::NeCapacity,
        Family::Capacity,
        Family::Load,
        Family::MaxLoad,
        Family::Resource,
        Family::FlowRes,
        Family::MapLink,
        Family::MapSrc,
        Family::MapSink,
        Family::ReqFmin,
        Family::ReqFmax,
        Family::ReqFconst,
        Family::ExpOut,
        Family::ExpIn,
        Family::Direction,
        Family::RelateF,
        Family::FlowMap,
        Family::New,
        Family::Migrated,
        Family::External,
    ];

    pub fn from_tag(tag: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.tag() == tag)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Family::MapNode => "map_node",
            Family::SetNew => "set_new",
            Family::ReqMin => "req_min",
            Family::ReqMax => "req_max",
            Family::ReqCon => "req_con",
            Family::RelateV => "relate_V",
            Family::Allowed => "allowed",
            Family::NeCapacity => "ne_capacity",
            Family::Capacity => "capacity",
            Family::Load => "load",
            Family::MaxLoad => "max_load",
            Family::Resource => "resource",
            Family::FlowRes => "flow_res",
            Family::MapLink => "map_link",
            Family::MapSrc => "map_src",
            Family::MapSink => "map_sink",
            Family::ReqFmin => "req_fmin",
            Family::ReqFmax => "req_fmax",
            Family::ReqFconst => "req_fconst",
            Family::ExpOut => "exp_out",
            Family::ExpIn => "exp_in",
            Family::Direction => "direction",
            Family::RelateF => "relate_f",
            Family::FlowMap => "flow_map",
            Family::New => "new",
            Family::Migrated => "migrated",
            Family::External => "row",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub family: Family,
    /// Element/flow/resource ids the row was generated for.
    pub origin: String,
}

impl LinearConstraint {
    pub fn name(&self) -> String {
        format!("{}[{}]", self.family, self.origin)
    }

    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[v.0]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
}

#[derive(Clone, Debug)]
pub struct MipModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub report: BuildReport,
    index: HashMap<String, VarId>,
}

impl PartialEq for MipModel {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
            && self.constraints == other.constraints
            && self.objective == other.objective
            && self.sense == other.sense
    }
}

impl MipModel {
    pub fn new() -> Self {
        MipModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Minimize,
            report: BuildReport::default(),
            index: HashMap::new(),
        }
    }

    /// Adds a variable; returns the existing id when the name is taken.
    pub fn add_variable(&mut self, key: VarKey, lower: f64, upper: f64, integrality: Integrality) -> VarId {
        let name = key.to_string();
        if let Some(id) = self.index.get(&name) {
            return *id;
        }
        let id = VarId(self.variables.len());
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            key,
            lower,
            upper,
            integrality,
        });
        id
    }

    pub fn add_binary(&mut self, key: VarKey) -> VarId {
        self.add_variable(key, 0.0, 1.0, Integrality::Binary)
    }

    pub fn add_continuous(&mut self, key: VarKey) -> VarId {
        self.add_variable(key, 0.0, f64::INFINITY, Integrality::Continuous)
    }

    /// Adds a row after merging duplicate terms and dropping zero coefficients.
    pub fn add_constraint(
        &mut self,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
        family: Family,
        origin: String,
    ) {
        let terms = merge_terms(terms);
        self.constraints.push(LinearConstraint {
            terms,
            relation,
            rhs,
            family,
            origin,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = merge_terms(terms);
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn var_of(&self, key: &VarKey) -> Option<VarId> {
        self.var(&key.to_string())
    }

    /// Symbol table lookup: variable name to the problem entity it encodes.
    pub fn key_of(&self, name: &str) -> Option<&VarKey> {
        self.var(name).map(|id| &self.variables[id.0].key)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    pub fn count(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integrality == Integrality::Binary)
            .map(|(i, _)| VarId(i))
    }

    /// Largest absolute violation of any bound or row by `values`.
    pub fn max_violation(&self, values: &[f64]) -> (f64, Option<String>) {
        let mut worst = (0.0, None);
        for (i, v) in self.variables.iter().enumerate() {
            let x = values[i];
            let viol = (v.lower - x).max(x - v.upper).max(0.0);
            if viol > worst.0 {
                worst = (viol, Some(v.name.clone()));
            }
        }
        for c in &self.constraints {
            let viol = c.relation.violation(c.lhs(values), c.rhs);
            if viol > worst.0 {
                worst = (viol, Some(c.name()));
            }
        }
        worst
    }
}

impl Default for MipModel {
    fn default() -> Self {
        Self::new()
    }
}

fn merge_terms(terms: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    let mut seen: HashMap<VarId, usize> = HashMap::new();
    for (v, c) in terms {
        match seen.get(&v) {
            Some(&i) => out[i].1 += c,
            None => {
                seen.insert(v, out.len());
                out.push((v, c));
            }
        }
    }
    out.retain(|(_, c)| *c != 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_terms_merge_and_zeros_drop() {
        let mut m = MipModel::new();
        let x = m.add_continuous(VarKey::External("x".into()));
        let y = m.add_continuous(VarKey::External("y".into()));
        m.add_constraint(
            vec![(x, 1.0), (y, 0.0), (x, 2.0)],
            Relation::Le,
            1.0,
            Family::External,
            "r".into(),
        );
        assert_eq!(m.constraints[0].terms, vec![(x, 3.0)]);
    }

    #[test]
    fn violation_reports_worst_row() {
        let mut m = MipModel::new();
        let x = m.add_continuous(VarKey::External("x".into()));
        m.add_constraint(vec![(x, 1.0)], Relation::Ge, 3.0, Family::External, "a".into());
        let (v, name) = m.max_violation(&[1.0]);
        assert_eq!(v, 2.0);
        assert_eq!(name.as_deref(), Some("row[a]"));
    }
}
