//! LP-based branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Condvar, Mutex};
use web_time::Instant;

use crate::error::SolveError;
use crate::mip::{Integrality, MipModel};

use super::lp::{simplex, LpOutcome};
use super::presolve::{presolve, FamilySet, Presolved};
use super::{MilpSolution, MilpStatus, SolveStats, SolverConfig};

const INT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
struct Node {
    fixings: Vec<(usize, f64)>,
    bound: f64,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

enum Frontier {
    Stack(Vec<Node>),
    Heap(BinaryHeap<Node>),
}

impl Frontier {
    fn push(&mut self, n: Node) {
        match self {
            Frontier::Stack(s) => s.push(n),
            Frontier::Heap(h) => h.push(n),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Stack(s) => s.pop(),
            Frontier::Heap(h) => h.pop(),
        }
    }

    fn min_bound(&self) -> f64 {
        let it: Box<dyn Iterator<Item = &Node>> = match self {
            Frontier::Stack(s) => Box::new(s.iter()),
            Frontier::Heap(h) => Box::new(h.iter()),
        };
        it.map(|n| n.bound).fold(f64::INFINITY, f64::min)
    }
}

struct Shared {
    frontier: Frontier,
    incumbent: Option<(f64, Vec<f64>)>,
    pruned_bound: f64,
    active: usize,
    seq: u64,
    stats: SolveStats,
    stop: Option<MilpStatus>,
    error: Option<SolveError>,
    root_families: Option<FamilySet>,
}

enum NodeLp {
    Solved { x: Vec<f64>, objective: f64 },
    Infeasible(FamilySet),
}

struct Search<'a> {
    model: &'a MipModel,
    config: &'a SolverConfig,
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Binary variables in name order, for deterministic tie-breaking.
    binaries: Vec<usize>,
    deadline: Option<Instant>,
}

impl<'a> Search<'a> {
    fn solve_node(&self, fixings: &[(usize, f64)], iterations: &mut u64) -> Result<Option<NodeLp>, SolveError> {
        let mut lb = self.lb.clone();
        let mut ub = self.ub.clone();
        for &(j, v) in fixings {
            lb[j] = v;
            ub[j] = v;
        }
        let reduced = match presolve(self.model, &lb, &ub, true) {
            Presolved::Infeasible(mask) => return Ok(Some(NodeLp::Infeasible(mask))),
            Presolved::Reduced(r) => r,
        };
        let result = simplex(&reduced.lp, self.deadline);
        *iterations += result.iterations as u64;
        match result.outcome {
            LpOutcome::Optimal { x, objective } => Ok(Some(NodeLp::Solved {
                x: reduced.expand(&x),
                objective: objective + reduced.offset,
            })),
            LpOutcome::Infeasible { rows } => Ok(Some(NodeLp::Infeasible(reduced.explain(self.model, &rows)))),
            LpOutcome::Unbounded => Err(SolveError::Unbounded),
            LpOutcome::TimeLimit => Ok(None),
            LpOutcome::Failure(msg) => Err(SolveError::Numerical(msg)),
        }
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let frac = x[j] - x[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist <= INT_TOL {
                continue;
            }
            // binaries are in name order, so a strict comparison keeps the
            // smallest name among equally fractional candidates
            if best.is_none_or(|(_, d)| dist > d + 1e-12) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Turns an integral-enough LP point into an exactly feasible incumbent
    /// by fixing the rounded binaries and resolving the continuous part.
    fn polish(&self, x: &[f64], iterations: &mut u64) -> Result<Option<(f64, Vec<f64>)>, SolveError> {
        let mut rounded = x.to_vec();
        for &j in &self.binaries {
            rounded[j] = rounded[j].round().clamp(0.0, 1.0);
        }
        if self.model.max_violation(&rounded).0 <= self.config.tolerance {
            return Ok(Some((self.model.objective_value(&rounded), rounded)));
        }
        let fixings: Vec<(usize, f64)> = self.binaries.iter().map(|&j| (j, rounded[j])).collect();
        match self.solve_node(&fixings, iterations)? {
            Some(NodeLp::Solved { x, .. }) => {
                let mut point = x;
                for &(j, v) in &fixings {
                    point[j] = v;
                }
                if self.model.max_violation(&point).0 <= self.config.tolerance {
                    Ok(Some((self.model.objective_value(&point), point)))
                } else {
                    Ok(None)
                }
            }
            _ => Ok(None),
        }
    }

    fn gap(&self, incumbent: f64) -> f64 {
        (self.config.mip_gap * incumbent.abs().max(1.0)).max(1e-9)
    }

    fn worker(&self, state: &Mutex<Shared>, cv: &Condvar) {
        loop {
            let node = {
                let mut s = state.lock().expect("solver state poisoned");
                loop {
                    if s.stop.is_some() {
                        return;
                    }
                    if let Some(d) = self.deadline {
                        if Instant::now() >= d {
                            s.stop = Some(MilpStatus::TimeLimit);
                            cv.notify_all();
                            return;
                        }
                    }
                    if let Some(node) = s.frontier.pop() {
                        if let Some((inc, _)) = &s.incumbent {
                            if node.bound >= inc - self.gap(*inc) {
                                s.pruned_bound = s.pruned_bound.min(node.bound);
                                continue;
                            }
                        }
                        s.active += 1;
                        s.stats.nodes += 1;
                        break node;
                    }
                    if s.active == 0 {
                        cv.notify_all();
                        return;
                    }
                    s = cv.wait(s).expect("solver state poisoned");
                }
            };
            let mut iterations = 0;
            let outcome = self.process(&node, state, &mut iterations);
            let mut s = state.lock().expect("solver state poisoned");
            s.active -= 1;
            s.stats.lp_iterations += iterations;
            match outcome {
                Err(e) => {
                    s.error.get_or_insert(e);
                    s.stop.get_or_insert(MilpStatus::Infeasible);
                }
                Ok(Step::TimeLimit) => {
                    s.stop.get_or_insert(MilpStatus::TimeLimit);
                    // the node was not finished; keep its bound in play
                    s.frontier.push(node);
                }
                Ok(Step::Infeasible(mask)) => {
                    if node.fixings.is_empty() {
                        s.root_families = Some(mask);
                    }
                }
                Ok(Step::Pruned(bound)) => s.pruned_bound = s.pruned_bound.min(bound),
                Ok(Step::Incumbent(value, point)) => {
                    if s.incumbent.as_ref().is_none_or(|(inc, _)| value < *inc) {
                        s.incumbent = Some((value, point));
                    }
                    if self.config.feasibility_only {
                        s.stop.get_or_insert(MilpStatus::Feasible);
                    }
                }
                Ok(Step::Branch { var, bound, heuristic }) => {
                    if let Some((value, point)) = heuristic {
                        if s.incumbent.as_ref().is_none_or(|(inc, _)| value < *inc) {
                            s.incumbent = Some((value, point));
                        }
                        if self.config.feasibility_only {
                            s.stop.get_or_insert(MilpStatus::Feasible);
                        }
                    }
                    for value in [1.0, 0.0] {
                        let mut fixings = node.fixings.clone();
                        fixings.push((var, value));
                        s.seq += 1;
                        let seq = s.seq;
                        s.frontier.push(Node { fixings, bound, seq });
                    }
                }
            }
            cv.notify_all();
        }
    }

    fn process(&self, node: &Node, state: &Mutex<Shared>, iterations: &mut u64) -> Result<Step, SolveError> {
        let (x, objective) = match self.solve_node(&node.fixings, iterations)? {
            None => return Ok(Step::TimeLimit),
            Some(NodeLp::Infeasible(mask)) => return Ok(Step::Infeasible(mask)),
            Some(NodeLp::Solved { x, objective }) => (x, objective),
        };
        let incumbent = state
            .lock()
            .expect("solver state poisoned")
            .incumbent
            .as_ref()
            .map(|(v, _)| *v);
        if let Some(inc) = incumbent {
            if objective >= inc - self.gap(inc) {
                return Ok(Step::Pruned(objective));
            }
        }
        match self.most_fractional(&x) {
            None => Ok(match self.polish(&x, iterations)? {
                Some((value, point)) => Step::Incumbent(value, point),
                // rounding broke feasibility; treat the node as exhausted
                None => Step::Pruned(objective),
            }),
            Some(var) => {
                let heuristic = if node.fixings.is_empty() && self.config.rounding {
                    self.round_up(&x, iterations)?
                } else {
                    None
                };
                Ok(Step::Branch {
                    var,
                    bound: objective,
                    heuristic,
                })
            }
        }
    }

    /// Root rounding check: all fractional binaries up, then to nearest.
    fn round_up(&self, x: &[f64], iterations: &mut u64) -> Result<Option<(f64, Vec<f64>)>, SolveError> {
        for up in [true, false] {
            let mut y = x.to_vec();
            for &j in &self.binaries {
                y[j] = if up && y[j] > INT_TOL { 1.0 } else { y[j].round() };
            }
            if let Some(found) = self.polish(&y, iterations)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }
}

enum Step {
    TimeLimit,
    Infeasible(FamilySet),
    Pruned(f64),
    Incumbent(f64, Vec<f64>),
    Branch {
        var: usize,
        bound: f64,
        heuristic: Option<(f64, Vec<f64>)>,
    },
}

pub(crate) fn branch_and_bound(model: &MipModel, config: &SolverConfig) -> Result<MilpSolution, SolveError> {
    let start = Instant::now();
    let mut binaries: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integrality == Integrality::Binary)
        .map(|(j, _)| j)
        .collect();
    binaries.sort_by(|a, b| model.variables[*a].name.cmp(&model.variables[*b].name));
    let search = Search {
        model,
        config,
        lb: model.variables.iter().map(|v| v.lower).collect(),
        ub: model.variables.iter().map(|v| v.upper).collect(),
        binaries,
        deadline: config.time_limit.map(|t| start + t),
    };
    let frontier = if config.deterministic {
        Frontier::Stack(Vec::new())
    } else {
        Frontier::Heap(BinaryHeap::new())
    };
    let state = Mutex::new(Shared {
        frontier,
        incumbent: None,
        pruned_bound: f64::INFINITY,
        active: 0,
        seq: 0,
        stats: SolveStats::default(),
        stop: None,
        error: None,
        root_families: None,
    });
    state.lock().expect("fresh mutex").frontier.push(Node {
        fixings: Vec::new(),
        bound: f64::NEG_INFINITY,
        seq: 0,
    });
    let cv = Condvar::new();
    let workers = if config.deterministic { 1 } else { config.workers.max(1) };
    if workers == 1 {
        search.worker(&state, &cv);
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| search.worker(&state, &cv));
            }
        });
    }
    let mut s = state.into_inner().expect("solver state poisoned");
    if let Some(e) = s.error.take() {
        return Err(e);
    }
    s.stats.wall_time = start.elapsed();
    let open = s.frontier.min_bound();
    let (status, objective, point) = match (s.stop, s.incumbent.take()) {
        (Some(MilpStatus::TimeLimit), inc) => {
            let (o, p) = inc.map_or((f64::INFINITY, Vec::new()), |(o, p)| (o, p));
            (MilpStatus::TimeLimit, o, p)
        }
        (Some(MilpStatus::Feasible), Some((o, p))) => (MilpStatus::Feasible, o, p),
        (_, Some((o, p))) => (MilpStatus::Optimal, o, p),
        (_, None) => (MilpStatus::Infeasible, f64::INFINITY, Vec::new()),
    };
    let bound = match status {
        MilpStatus::Infeasible => f64::INFINITY,
        MilpStatus::Optimal => objective.min(s.pruned_bound),
        _ => objective.min(s.pruned_bound).min(open),
    };
    let infeasible_families = match status {
        MilpStatus::Infeasible => s.root_families.map(|m| m.families()).unwrap_or_default(),
        _ => Vec::new(),
    };
    Ok(MilpSolution::new(
        model,
        status,
        point,
        objective,
        bound,
        s.stats,
        infeasible_families,
    ))
}
