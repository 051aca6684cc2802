//! Bounded-variable revised primal simplex.
//!
//! Rows are written as `A x - r = 0` with one logical variable `r` per row
//! carrying the row bounds, so the crash basis is all logicals. Phase one
//! minimizes the sum of bound violations of basic variables; the basis
//! inverse is kept in product form and rebuilt every few dozen pivots.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use web_time::Instant;

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR: usize = 64;
const DEGENERATE_LIMIT: usize = 50;

/// LP in column form: minimize `cost . x` s.t. `row_lower <= A x <= row_upper`,
/// `lower <= x <= upper`.
#[derive(Clone, Debug, Default)]
pub(crate) struct LpProblem {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    /// Rows carrying nonzero phase-one duals at the infeasibility proof.
    Infeasible { rows: Vec<usize> },
    Unbounded,
    TimeLimit,
    Failure(String),
}

#[derive(Clone, Debug)]
pub(crate) struct LpResult {
    pub outcome: LpOutcome,
    pub iterations: usize,
}

pub(crate) fn simplex(p: &LpProblem, deadline: Option<Instant>) -> LpResult {
    let first = Simplex::new(p, false).run(deadline);
    if let LpOutcome::Failure(_) = first.outcome {
        let mut second = Simplex::new(p, true).run(deadline);
        second.iterations += first.iterations;
        return second;
    }
    first
}

struct Eta {
    row: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

struct Simplex<'a> {
    p: &'a LpProblem,
    m: usize,
    n: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    diag: Vec<f64>,
    etas: Vec<Eta>,
    /// Etas from the last rebuild; later ones are pivot updates.
    factor_etas: usize,
    force_bland: bool,
    iterations: usize,
}

const NONBASIC: usize = usize::MAX;

impl<'a> Simplex<'a> {
    fn new(p: &'a LpProblem, force_bland: bool) -> Self {
        let m = p.rows;
        let n = p.cols.len();
        let mut lb = p.lower.clone();
        let mut ub = p.upper.clone();
        lb.extend_from_slice(&p.row_lower);
        ub.extend_from_slice(&p.row_upper);
        let mut x = vec![0.0; n + m];
        for j in 0..n {
            x[j] = if lb[j].is_finite() {
                lb[j]
            } else if ub[j].is_finite() {
                ub[j]
            } else {
                0.0
            };
        }
        let mut pos = vec![NONBASIC; n + m];
        let basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        for (r, &b) in basis.iter().enumerate() {
            pos[b] = r;
        }
        let mut s = Simplex {
            p,
            m,
            n,
            lb,
            ub,
            x,
            basis,
            pos,
            diag: vec![-1.0; m],
            etas: Vec::new(),
            factor_etas: 0,
            force_bland,
            iterations: 0,
        };
        s.compute_basic_values();
        s
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, a) in &self.p.cols[j] {
                f(i, a);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    fn dot(&self, y: &[f64], j: usize) -> f64 {
        let mut s = 0.0;
        self.for_col(j, |i, a| s += a * y[i]);
        s
    }

    fn ftran(&self, v: &mut [f64]) {
        for (vi, d) in v.iter_mut().zip(&self.diag) {
            *vi /= d;
        }
        for e in &self.etas {
            let vr = v[e.row];
            if vr == 0.0 {
                continue;
            }
            v[e.row] = vr * e.pivot;
            for &(i, eta) in &e.others {
                v[i] += eta * vr;
            }
        }
    }

    fn btran(&self, y: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = e.pivot * y[e.row];
            for &(i, eta) in &e.others {
                s += eta * y[i];
            }
            y[e.row] = s;
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= d;
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        self.for_col(j, |i, a| v[i] += a);
        self.ftran(&mut v);
        v
    }

    fn push_eta(&mut self, row: usize, alpha: &[f64]) {
        let pivot = 1.0 / alpha[row];
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != row && *a != 0.0)
            .map(|(i, a)| (i, -a * pivot))
            .collect();
        self.etas.push(Eta { row, pivot, others });
    }

    fn compute_basic_values(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_col(j, |i, a| rhs[i] -= a * xj);
            }
        }
        self.ftran(&mut rhs);
        for r in 0..self.m {
            self.x[self.basis[r]] = rhs[r];
        }
    }

    fn nearest_bound(&self, j: usize) -> f64 {
        let (l, u, v) = (self.lb[j], self.ub[j], self.x[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if (v - l).abs() <= (u - v).abs() {
                    l
                } else {
                    u
                }
            }
            (true, false) => l,
            (false, true) => u,
            (false, false) => 0.0,
        }
    }

    /// Rebuilds the product-form inverse of the current basis from the
    /// logical basis. Structurals that cannot be pivoted in are dropped to
    /// a bound and the logical of their row stays basic.
    fn invert(&mut self) {
        let target = self.basis.clone();
        let mut in_target = vec![false; self.n + self.m];
        for &b in &target {
            in_target[b] = true;
        }
        self.etas.clear();
        self.diag = vec![-1.0; self.m];
        for p in self.pos.iter_mut() {
            *p = NONBASIC;
        }
        for i in 0..self.m {
            self.basis[i] = self.n + i;
            self.pos[self.n + i] = i;
        }
        let n = self.n;
        let mut cols: Vec<usize> = target.into_iter().filter(|&q| q < n).collect();
        // sparse columns first keeps the eta file short
        cols.sort_by_key(|&q| (self.p.cols[q].len(), q));
        let mut work = vec![0.0; self.m];
        let mut seen = vec![false; self.m];
        let mut nz: Vec<usize> = Vec::new();
        let mut eta_of: Vec<Option<usize>> = vec![None; self.m];
        let mut pending = BinaryHeap::new();
        for q in cols {
            for &(i, a) in &self.p.cols[q] {
                if !seen[i] {
                    seen[i] = true;
                    nz.push(i);
                }
                work[i] += a / self.diag[i];
            }
            // every row is pivoted at most once here, so only the etas of
            // rows the column reaches apply, in creation order
            for &i in &nz {
                if let Some(k) = eta_of[i] {
                    pending.push(Reverse(k));
                }
            }
            while let Some(Reverse(k)) = pending.pop() {
                let e = &self.etas[k];
                let vr = work[e.row];
                if vr == 0.0 {
                    continue;
                }
                work[e.row] = vr * e.pivot;
                for &(i, eta) in &e.others {
                    if !seen[i] {
                        seen[i] = true;
                        nz.push(i);
                        if let Some(j) = eta_of[i].filter(|&j| j > k) {
                            pending.push(Reverse(j));
                        }
                    }
                    work[i] += eta * vr;
                }
            }
            let mut best = None;
            let mut best_abs = PIVOT_TOL * 100.0;
            for &r in &nz {
                if !in_target[self.basis[r]] && work[r].abs() > best_abs {
                    best_abs = work[r].abs();
                    best = Some(r);
                }
            }
            match best {
                Some(r) => {
                    let pivot = 1.0 / work[r];
                    let others = nz
                        .iter()
                        .filter(|&&i| i != r && work[i] != 0.0)
                        .map(|&i| (i, -work[i] * pivot))
                        .collect();
                    eta_of[r] = Some(self.etas.len());
                    self.etas.push(Eta { row: r, pivot, others });
                    self.pos[self.basis[r]] = NONBASIC;
                    self.basis[r] = q;
                    self.pos[q] = r;
                }
                None => self.x[q] = self.nearest_bound(q),
            }
            for &i in &nz {
                work[i] = 0.0;
                seen[i] = false;
            }
            nz.clear();
        }
        self.factor_etas = self.etas.len();
        self.compute_basic_values();
    }

    /// Phase-one costs of the basic variables; `None` when the basis is
    /// primal feasible.
    fn infeasibility_costs(&self) -> Option<Vec<f64>> {
        let mut c = vec![0.0; self.m];
        let mut any = false;
        for (r, &b) in self.basis.iter().enumerate() {
            let v = self.x[b];
            if v < self.lb[b] - FEAS_TOL {
                c[r] = -1.0;
                any = true;
            } else if v > self.ub[b] + FEAS_TOL {
                c[r] = 1.0;
                any = true;
            }
        }
        any.then_some(c)
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.p.cost[j]
        } else {
            0.0
        }
    }

    /// Returns the entering variable and its reduced cost.
    fn price(&self, y: &[f64], phase1: bool, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC || self.lb[j] == self.ub[j] {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost(j) };
            let d = c - self.dot(y, j);
            let at_lower = self.x[j] <= self.lb[j];
            let at_upper = self.x[j] >= self.ub[j];
            let eligible = (d < -OPT_TOL && !at_upper) || (d > OPT_TOL && !at_lower);
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if best.is_none_or(|(_, bd)| d.abs() > bd.abs()) {
                best = Some((j, d));
            }
        }
        best
    }

    /// Step limit for basic variable `b` moving at `rate` per unit step.
    /// Returns the step and the value it lands on.
    fn limit(&self, b: usize, rate: f64, slack: f64) -> Option<(f64, f64)> {
        let (v, l, u) = (self.x[b], self.lb[b], self.ub[b]);
        if rate > 0.0 {
            if v > u + FEAS_TOL {
                None
            } else if v < l - FEAS_TOL {
                Some(((l - v + slack) / rate, l))
            } else if u.is_finite() {
                Some(((u - v + slack) / rate, u))
            } else {
                None
            }
        } else if v < l - FEAS_TOL {
            None
        } else if v > u + FEAS_TOL {
            Some(((v - u + slack) / -rate, u))
        } else if l.is_finite() {
            Some(((v - l + slack) / -rate, l))
        } else {
            None
        }
    }

    fn ratio_test(&self, alpha: &[f64], dir: f64, bland: bool) -> Option<(usize, f64, f64)> {
        let mut theta_max = f64::INFINITY;
        for (r, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some((t, _)) = self.limit(self.basis[r], -dir * a, FEAS_TOL) {
                theta_max = theta_max.min(t);
            }
        }
        if !theta_max.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut best_key = (f64::INFINITY, f64::NEG_INFINITY, usize::MAX);
        for (r, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[r];
            let Some((t, target)) = self.limit(b, -dir * a, 0.0) else {
                continue;
            };
            if t > theta_max {
                continue;
            }
            let t = t.max(0.0);
            let better = if bland {
                t < best_key.0 - 1e-12 || (t <= best_key.0 + 1e-12 && b < best_key.2)
            } else {
                a.abs() > best_key.1
            };
            if better {
                best_key = (t, a.abs(), b);
                best = Some((r, t, target));
            }
        }
        best
    }

    fn run(mut self, deadline: Option<Instant>) -> LpResult {
        let max_iter = 50_000 + 50 * (self.m + self.n);
        let mut fresh = true;
        let mut degenerate = 0usize;
        let mut bland = self.force_bland;
        let mut last_phase1 = None;
        loop {
            if self.iterations >= max_iter {
                return self.finish(LpOutcome::Failure("simplex iteration limit".into()));
            }
            if self.iterations.is_multiple_of(32) {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return self.finish(LpOutcome::TimeLimit);
                    }
                }
            }
            if self.etas.len() - self.factor_etas >= REFACTOR {
                self.invert();
                fresh = true;
            }
            let phase1_costs = self.infeasibility_costs();
            let phase1 = phase1_costs.is_some();
            if last_phase1 != Some(phase1) {
                degenerate = 0;
                bland = self.force_bland;
                last_phase1 = Some(phase1);
            }
            let mut y = match &phase1_costs {
                Some(c) => c.clone(),
                None => self.basis.iter().map(|&b| self.cost(b)).collect(),
            };
            self.btran(&mut y);
            let Some((q, d)) = self.price(&y, phase1, bland) else {
                if !fresh {
                    self.invert();
                    fresh = true;
                    continue;
                }
                if phase1 {
                    let rows = (0..self.m).filter(|&i| y[i].abs() > 1e-9).collect();
                    return self.finish(LpOutcome::Infeasible { rows });
                }
                let x: Vec<f64> = self.x[..self.n].to_vec();
                let objective = x.iter().zip(&self.p.cost).map(|(a, b)| a * b).sum();
                return self.finish(LpOutcome::Optimal { x, objective });
            };
            let alpha = self.column(q);
            let dir = if d < 0.0 { 1.0 } else { -1.0 };
            let range = self.ub[q] - self.lb[q];
            let step = self.ratio_test(&alpha, dir, bland);
            self.iterations += 1;
            fresh = false;
            match step {
                Some((_, theta, _)) if range <= theta => self.flip(q, dir, range, &alpha),
                None if range.is_finite() => self.flip(q, dir, range, &alpha),
                None => {
                    if phase1 {
                        return self.finish(LpOutcome::Failure("unbounded phase one ray".into()));
                    }
                    return self.finish(LpOutcome::Unbounded);
                }
                Some((r, theta, target)) => {
                    if theta <= 1e-12 {
                        degenerate += 1;
                        if degenerate > DEGENERATE_LIMIT {
                            bland = true;
                        }
                    } else {
                        degenerate = 0;
                    }
                    self.x[q] += dir * theta;
                    for (i, a) in alpha.iter().enumerate() {
                        if *a != 0.0 {
                            let b = self.basis[i];
                            self.x[b] -= dir * theta * a;
                        }
                    }
                    let leaving = self.basis[r];
                    self.x[leaving] = target;
                    self.push_eta(r, &alpha);
                    self.pos[leaving] = NONBASIC;
                    self.basis[r] = q;
                    self.pos[q] = r;
                }
            }
        }
    }

    fn flip(&mut self, q: usize, dir: f64, range: f64, alpha: &[f64]) {
        self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
        for (i, a) in alpha.iter().enumerate() {
            if *a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= dir * range * a;
            }
        }
    }

    fn finish(self, outcome: LpOutcome) -> LpResult {
        LpResult {
            outcome,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(rows: usize, cols: Vec<Vec<(usize, f64)>>, cost: Vec<f64>, rl: Vec<f64>, ru: Vec<f64>) -> LpProblem {
        let n = cols.len();
        LpProblem {
            rows,
            cols,
            cost,
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            row_lower: rl,
            row_upper: ru,
        }
    }

    fn optimum(p: &LpProblem) -> (Vec<f64>, f64) {
        match simplex(p, None).outcome {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn single_lower_bound_row() {
        let p = problem(1, vec![vec![(0, 1.0)]], vec![1.0], vec![3.0], vec![f64::INFINITY]);
        let (x, v) = optimum(&p);
        assert!((v - 3.0).abs() < 1e-9);
        assert!((x[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_variable_cover() {
        let p = problem(
            1,
            vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            vec![1.0, 1.0],
            vec![2.0],
            vec![f64::INFINITY],
        );
        assert!((optimum(&p).1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn classic_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let p = problem(
            3,
            vec![vec![(0, 1.0), (2, 3.0)], vec![(1, 2.0), (2, 2.0)]],
            vec![-3.0, -5.0],
            vec![f64::NEG_INFINITY; 3],
            vec![4.0, 12.0, 18.0],
        );
        let (x, v) = optimum(&p);
        assert!((v + 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_with_upper_bounds() {
        // min -x - 2y, x + y = 1, 0 <= x, y <= 0.7
        let mut p = problem(
            1,
            vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            vec![-1.0, -2.0],
            vec![1.0],
            vec![1.0],
        );
        p.upper = vec![0.7, 0.7];
        let (x, v) = optimum(&p);
        assert!((x[1] - 0.7).abs() < 1e-9);
        assert!((v + 1.7).abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows_are_reported() {
        // x >= 2 and x <= 1, plus an unrelated row
        let p = problem(
            3,
            vec![vec![(0, 1.0), (1, 1.0)], vec![(2, 1.0)]],
            vec![0.0, 0.0],
            vec![2.0, f64::NEG_INFINITY, 0.0],
            vec![f64::INFINITY, 1.0, 5.0],
        );
        match simplex(&p, None).outcome {
            LpOutcome::Infeasible { rows } => assert_eq!(rows, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_is_detected() {
        let p = problem(1, vec![vec![(0, 1.0)]], vec![-1.0], vec![1.0], vec![f64::INFINITY]);
        assert!(matches!(simplex(&p, None).outcome, LpOutcome::Unbounded));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Highly degenerate assignment-like polytope.
        let k = 6;
        let mut cols = Vec::new();
        let mut cost = Vec::new();
        for i in 0..k {
            for j in 0..k {
                cols.push(vec![(i, 1.0), (k + j, 1.0)]);
                cost.push(((i * 7 + j * 3) % 5) as f64);
            }
        }
        let p = problem(2 * k, cols, cost, vec![1.0; 2 * k], vec![1.0; 2 * k]);
        let (_, v) = optimum(&p);
        assert!(v >= 0.0);
        let bland = Simplex::new(&p, true).run(None);
        match bland.outcome {
            LpOutcome::Optimal { objective, .. } => assert!((objective - v).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
