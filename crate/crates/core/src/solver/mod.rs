//! Built-in LP/branch-and-bound solver and the file bridge to external
//! MILP solvers.

mod bnb;
pub mod export;
mod external;
pub mod import;
mod lp;
mod presolve;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::SolveError;
use crate::mip::{Family, Integrality, MipModel};

pub use export::{export_model, parse_lp, parse_mps, sanitized_names, ExportFormat};
pub use external::ExternalSolver;
pub use import::import_solution;

use lp::{simplex, LpOutcome};
use presolve::{presolve, Presolved};

#[derive(Clone, Debug, Default)]
pub enum SolverMode {
    #[default]
    BuiltIn,
    External(ExternalSolver),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Depth-first search on a single logical worker; stats are reproducible.
    pub deterministic: bool,
    pub workers: usize,
    pub time_limit: Option<Duration>,
    /// Relative optimality gap; 0 solves to optimality.
    pub mip_gap: f64,
    /// Stop at the first incumbent.
    pub feasibility_only: bool,
    /// Feasibility and integrality tolerance.
    pub tolerance: f64,
    /// Try rounding the root relaxation before branching.
    pub rounding: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolverMode::BuiltIn,
            deterministic: false,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get().min(6)),
            time_limit: None,
            mip_gap: 0.0,
            feasibility_only: false,
            tolerance: 1e-6,
            rounding: true,
        }
    }
}

impl SolverConfig {
    pub fn deterministic() -> Self {
        SolverConfig {
            deterministic: true,
            workers: 1,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Values by variable name; empty without an incumbent.
    pub values: BTreeMap<String, f64>,
    /// Values by variable index; empty without an incumbent.
    pub point: Vec<f64>,
    pub objective: f64,
    /// Best proven lower bound.
    pub bound: f64,
    pub stats: SolveStats,
    /// Families involved in the root infeasibility proof.
    pub infeasible_families: Vec<Family>,
    pub warnings: Vec<String>,
}

impl MilpSolution {
    pub(crate) fn new(
        model: &MipModel,
        status: MilpStatus,
        mut point: Vec<f64>,
        objective: f64,
        bound: f64,
        stats: SolveStats,
        infeasible_families: Vec<Family>,
    ) -> Self {
        for (x, v) in point.iter_mut().zip(&model.variables) {
            if v.integrality == Integrality::Binary {
                *x = x.round();
            }
        }
        let values = point
            .iter()
            .zip(&model.variables)
            .map(|(x, v)| (v.name.clone(), *x))
            .collect();
        MilpSolution {
            status,
            values,
            point,
            objective,
            bound,
            stats,
            infeasible_families,
            warnings: Vec::new(),
        }
    }

    pub fn has_incumbent(&self) -> bool {
        !self.point.is_empty()
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub point: Vec<f64>,
    pub iterations: usize,
    pub infeasible_families: Vec<Family>,
    pub note: Option<String>,
}

fn check_model(model: &MipModel) -> Result<(), SolveError> {
    if model.variables.is_empty() {
        return Err(SolveError::EmptyModel);
    }
    for v in &model.variables {
        if v.lower.is_nan() || v.upper.is_nan() || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
            return Err(SolveError::NonFinite(format!("bounds of {}", v.name)));
        }
    }
    for c in &model.constraints {
        if !c.rhs.is_finite() || c.terms.iter().any(|(_, a)| !a.is_finite()) {
            return Err(SolveError::NonFinite(c.name()));
        }
    }
    if model.objective.iter().any(|(_, a)| !a.is_finite()) {
        return Err(SolveError::NonFinite("objective".into()));
    }
    Ok(())
}

/// Solves the continuous relaxation of `model`.
pub fn solve_lp(model: &MipModel, tolerance: f64) -> Result<LpSolution, SolveError> {
    check_model(model)?;
    let lb: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let ub: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let mut out = LpSolution {
        status: LpStatus::Infeasible,
        value: f64::INFINITY,
        point: Vec::new(),
        iterations: 0,
        infeasible_families: Vec::new(),
        note: None,
    };
    let reduced = match presolve(model, &lb, &ub, false) {
        Presolved::Infeasible(mask) => {
            out.infeasible_families = mask.families();
            return Ok(out);
        }
        Presolved::Reduced(r) => r,
    };
    let result = simplex(&reduced.lp, None);
    out.iterations = result.iterations;
    match result.outcome {
        LpOutcome::Optimal { x, objective } => {
            let point = reduced.expand(&x);
            let (viol, row) = model.max_violation(&point);
            if viol > tolerance {
                out.status = LpStatus::NumericalFailure;
                out.note = Some(format!("point violates {} by {viol:e}", row.unwrap_or_default()));
                return Ok(out);
            }
            out.status = LpStatus::Optimal;
            out.value = objective + reduced.offset;
            out.point = point;
        }
        LpOutcome::Infeasible { rows } => {
            out.infeasible_families = reduced.explain(model, &rows).families();
        }
        LpOutcome::Unbounded => {
            out.status = LpStatus::Unbounded;
            out.value = f64::NEG_INFINITY;
        }
        LpOutcome::TimeLimit => out.status = LpStatus::TimeLimit,
        LpOutcome::Failure(msg) => {
            out.status = LpStatus::NumericalFailure;
            out.note = Some(msg);
        }
    }
    Ok(out)
}

/// Solves `model` to optimality (or gap, first incumbent, time limit).
pub fn solve_milp(model: &MipModel, config: &SolverConfig) -> Result<MilpSolution, SolveError> {
    check_model(model)?;
    match &config.mode {
        SolverMode::BuiltIn => {
            let solution = bnb::branch_and_bound(model, config)?;
            if solution.has_incumbent() {
                let (viol, row) = model.max_violation(&solution.point);
                if viol > config.tolerance {
                    return Err(SolveError::Numerical(format!(
                        "incumbent violates {} by {viol:e}",
                        row.unwrap_or_default()
                    )));
                }
            }
            Ok(solution)
        }
        SolverMode::External(ext) => {
            let start = Instant::now();
            let mut solution = ext.solve(model, config)?;
            solution.stats.wall_time = start.elapsed();
            Ok(solution)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::{Relation, VarKey};

    fn var(m: &mut MipModel, name: &str, binary: bool) -> crate::mip::VarId {
        let key = VarKey::External(name.into());
        if binary {
            m.add_binary(key)
        } else {
            m.add_continuous(key)
        }
    }

    #[test]
    fn lp_single_bound() {
        let mut m = MipModel::new();
        let x = var(&mut m, "x", false);
        m.add_constraint(vec![(x, 1.0)], Relation::Ge, 3.0, Family::External, "a".into());
        m.set_objective(vec![(x, 1.0)]);
        let s = solve_lp(&m, 1e-6).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn lp_sum_cover() {
        let mut m = MipModel::new();
        let x = var(&mut m, "x", false);
        let y = var(&mut m, "y", false);
        m.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 2.0, Family::External, "a".into());
        m.set_objective(vec![(x, 1.0), (y, 1.0)]);
        assert!((solve_lp(&m, 1e-6).unwrap().value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn relaxation_picks_cheaper_candidate() {
        // map_node over two candidates with weights 1 and 0.4; the two
        // vertices of the relaxation are (1, 0) at 1 and (0, 1) at 0.4.
        let mut m = MipModel::new();
        let a = var(&mut m, "a", true);
        let b = var(&mut m, "b", true);
        m.add_constraint(vec![(a, 1.0), (b, 1.0)], Relation::Eq, 1.0, Family::MapNode, "u".into());
        m.set_objective(vec![(a, 1.0), (b, 0.4)]);
        let s = solve_lp(&m, 1e-6).unwrap();
        assert!((s.value - 0.4).abs() < 1e-9);
        assert_eq!(s.point, vec![0.0, 1.0]);
    }

    #[test]
    fn empty_model_is_rejected() {
        assert!(matches!(
            solve_lp(&MipModel::new(), 1e-6),
            Err(SolveError::EmptyModel)
        ));
    }

    #[test]
    fn forced_binaries_solve_at_root() {
        let mut m = MipModel::new();
        let a = var(&mut m, "a", true);
        let b = var(&mut m, "b", true);
        m.add_constraint(vec![(a, 1.0), (b, 1.0)], Relation::Eq, 1.0, Family::MapNode, "u".into());
        m.add_constraint(vec![(b, 1.0)], Relation::Le, 0.0, Family::Allowed, "u,B".into());
        m.set_objective(vec![(a, 1.0), (b, 0.4)]);
        let s = solve_milp(&m, &SolverConfig::deterministic()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert_eq!(s.stats.nodes, 1);
        assert_eq!(s.value("a"), Some(1.0));
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = MipModel::new();
        let a = var(&mut m, "a", true);
        let b = var(&mut m, "b", true);
        let c = var(&mut m, "c", true);
        let d = var(&mut m, "d", true);
        m.add_constraint(
            vec![(a, 3.0), (b, 5.0), (c, 4.0), (d, 3.0)],
            Relation::Le,
            8.0,
            Family::External,
            "cap".into(),
        );
        m.set_objective(vec![(a, -4.0), (b, -6.0), (c, -5.0), (d, -3.5)]);
        for config in [SolverConfig::deterministic(), SolverConfig { workers: 4, ..SolverConfig::default() }] {
            let s = solve_milp(&m, &config).unwrap();
            assert_eq!(s.status, MilpStatus::Optimal);
            // best pairs: b + d = 8 -> 9.5, a + c = 7 -> 9, a + b = 8 -> 10
            assert!((s.objective + 10.0).abs() < 1e-9, "{}", s.objective);
            assert!(s.bound <= s.objective + 1e-9);
        }
    }

    #[test]
    fn infeasible_milp_names_families() {
        let mut m = MipModel::new();
        let a = var(&mut m, "a", true);
        let b = var(&mut m, "b", true);
        m.add_constraint(vec![(a, 1.0), (b, 1.0)], Relation::Eq, 1.0, Family::MapNode, "u".into());
        m.add_constraint(vec![(a, 1.0), (b, 1.0)], Relation::Le, 0.5, Family::NeCapacity, "A".into());
        let s = solve_milp(&m, &SolverConfig::deterministic()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
        assert!(s.infeasible_families.contains(&Family::MapNode));
        assert!(s.infeasible_families.contains(&Family::NeCapacity));
    }

    #[test]
    fn deterministic_stats_repeat() {
        let mut m = MipModel::new();
        let vars: Vec<_> = (0..8).map(|i| var(&mut m, &format!("x{i}"), true)).collect();
        let w = [3.0, 5.0, 7.0, 4.0, 6.0, 2.0, 8.0, 5.5];
        m.add_constraint(
            vars.iter().zip(w).map(|(v, w)| (*v, w)).collect(),
            Relation::Le,
            17.5,
            Family::External,
            "cap".into(),
        );
        m.set_objective(vars.iter().zip(w).map(|(v, w)| (*v, -(w + 1.0))).collect());
        let config = SolverConfig {
            workers: 4,
            ..SolverConfig::deterministic()
        };
        let a = solve_milp(&m, &config).unwrap();
        let b = solve_milp(&m, &config).unwrap();
        assert_eq!(a.stats.nodes, b.stats.nodes);
        assert_eq!(a.stats.lp_iterations, b.stats.lp_iterations);
        assert_eq!(a.point, b.point);
        let parallel = solve_milp(&m, &SolverConfig { workers: 3, ..SolverConfig::default() }).unwrap();
        assert!((parallel.objective - a.objective).abs() < 1e-9);
    }
}
