//! Bound-driven reductions applied before every LP solve.
//!
//! Fixed variables are substituted, singleton rows become bounds, rows that
//! can never bind are dropped and, for binaries, activity bounds fix values
//! that cannot satisfy a row. Each tightened bound remembers the families of
//! the rows that caused it so an infeasibility found here can be explained.

use crate::mip::{Family, Integrality, MipModel, Relation};

use super::lp::LpProblem;

const TOL: f64 = 1e-9;
const INFEASIBLE_TOL: f64 = 1e-7;
const MAX_PASSES: usize = 25;

/// Set of constraint families as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct FamilySet(u32);

impl FamilySet {
    pub fn of(f: Family) -> Self {
        FamilySet(1 << f as u32)
    }

    pub fn union(self, other: FamilySet) -> Self {
        FamilySet(self.0 | other.0)
    }

    pub fn families(self) -> Vec<Family> {
        Family::ALL
            .into_iter()
            .filter(|f| self.0 & (1 << *f as u32) != 0)
            .collect()
    }
}

pub(crate) struct Reduced {
    pub lp: LpProblem,
    /// Original variable index of each LP column.
    pub cols: Vec<usize>,
    /// Original constraint index of each LP row.
    pub rows: Vec<usize>,
    /// Full-length point holding the values of eliminated variables.
    pub fixed: Vec<f64>,
    pub offset: f64,
    /// Explanation masks of the LP column bounds.
    pub reasons: Vec<FamilySet>,
}

impl Reduced {
    /// Expands an LP point to the original variable space.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.fixed.clone();
        for (k, &j) in self.cols.iter().enumerate() {
            full[j] = x[k];
        }
        full
    }

    pub fn explain(&self, model: &MipModel, lp_rows: &[usize]) -> FamilySet {
        let mut mask = FamilySet::default();
        for &r in lp_rows {
            let k = self.rows[r];
            mask = mask.union(FamilySet::of(model.constraints[k].family));
        }
        for (k, col) in self.lp.cols.iter().enumerate() {
            if col.iter().any(|(r, _)| lp_rows.contains(r)) {
                mask = mask.union(self.reasons[k]);
            }
        }
        mask
    }
}

pub(crate) enum Presolved {
    Reduced(Reduced),
    Infeasible(FamilySet),
}

fn row_bounds(relation: Relation, rhs: f64) -> (f64, f64) {
    match relation {
        Relation::Le => (f64::NEG_INFINITY, rhs),
        Relation::Ge => (rhs, f64::INFINITY),
        Relation::Eq => (rhs, rhs),
    }
}

struct Activity {
    min: f64,
    max: f64,
    min_inf: usize,
    max_inf: usize,
    free: usize,
    last_free: usize,
}

fn activity(terms: &[(crate::mip::VarId, f64)], lb: &[f64], ub: &[f64]) -> Activity {
    let mut a = Activity {
        min: 0.0,
        max: 0.0,
        min_inf: 0,
        max_inf: 0,
        free: 0,
        last_free: 0,
    };
    for &(v, c) in terms {
        let (l, u) = (lb[v.0], ub[v.0]);
        if l != u {
            a.free += 1;
            a.last_free = v.0;
        }
        let (lo, hi) = if c > 0.0 { (c * l, c * u) } else { (c * u, c * l) };
        if lo.is_finite() {
            a.min += lo;
        } else {
            a.min_inf += 1;
        }
        if hi.is_finite() {
            a.max += hi;
        } else {
            a.max_inf += 1;
        }
    }
    a
}

/// Reduces `model` under the bounds `lb`/`ub`. With `integral`, binary
/// bounds are rounded and binaries fixed by activity arguments.
pub(crate) fn presolve(model: &MipModel, lb: &[f64], ub: &[f64], integral: bool) -> Presolved {
    let n = model.variables.len();
    let mut lb = lb.to_vec();
    let mut ub = ub.to_vec();
    let mut reason = vec![FamilySet::default(); n];
    let binary: Vec<bool> = model
        .variables
        .iter()
        .map(|v| integral && v.integrality == Integrality::Binary)
        .collect();
    let mut active = vec![true; model.constraints.len()];
    let row_reason = |k: usize, reason: &[FamilySet]| {
        let c = &model.constraints[k];
        c.terms
            .iter()
            .fold(FamilySet::of(c.family), |m, (v, _)| m.union(reason[v.0]))
    };
    for j in 0..n {
        if lb[j] > ub[j] + INFEASIBLE_TOL {
            return Presolved::Infeasible(FamilySet::default());
        }
    }

    let mut changed = true;
    let mut passes = 0;
    while changed && passes < MAX_PASSES {
        changed = false;
        passes += 1;
        for (k, c) in model.constraints.iter().enumerate() {
            if !active[k] {
                continue;
            }
            let (lo, hi) = row_bounds(c.relation, c.rhs);
            let act = activity(&c.terms, &lb, &ub);
            let min = if act.min_inf > 0 { f64::NEG_INFINITY } else { act.min };
            let max = if act.max_inf > 0 { f64::INFINITY } else { act.max };
            let scale = 1.0 + lo.abs().min(hi.abs()).min(1e6);
            if min > hi + INFEASIBLE_TOL * scale || max < lo - INFEASIBLE_TOL * scale {
                return Presolved::Infeasible(row_reason(k, &reason));
            }
            if min >= lo - TOL && max <= hi + TOL {
                active[k] = false;
                changed = true;
                continue;
            }
            if act.free == 1 {
                let j = act.last_free;
                let a = c
                    .terms
                    .iter()
                    .filter(|(v, _)| v.0 == j)
                    .map(|(_, a)| *a)
                    .sum::<f64>();
                let rest: f64 = c
                    .terms
                    .iter()
                    .filter(|(v, _)| v.0 != j)
                    .map(|(v, a)| a * lb[v.0])
                    .sum();
                let (mut l, mut u) = ((lo - rest) / a, (hi - rest) / a);
                if a < 0.0 {
                    std::mem::swap(&mut l, &mut u);
                }
                if binary[j] {
                    l = (l - 1e-6).ceil();
                    u = (u + 1e-6).floor();
                }
                let why = row_reason(k, &reason);
                if l > lb[j] + TOL {
                    lb[j] = l;
                    reason[j] = reason[j].union(why);
                }
                if u < ub[j] - TOL {
                    ub[j] = u;
                    reason[j] = reason[j].union(why);
                }
                if lb[j] > ub[j] {
                    if lb[j] > ub[j] + INFEASIBLE_TOL * (1.0 + lb[j].abs()) {
                        return Presolved::Infeasible(reason[j]);
                    }
                    let mid = 0.5 * (lb[j] + ub[j]);
                    lb[j] = mid;
                    ub[j] = mid;
                }
                active[k] = false;
                changed = true;
                continue;
            }
            if !integral {
                continue;
            }
            for &(v, a) in &c.terms {
                let j = v.0;
                if !binary[j] || lb[j] == ub[j] {
                    continue;
                }
                let (own_min, own_max) = if a > 0.0 { (0.0, a) } else { (a, 0.0) };
                let rest_min = if act.min_inf > 0 { f64::NEG_INFINITY } else { act.min - own_min };
                let rest_max = if act.max_inf > 0 { f64::INFINITY } else { act.max - own_max };
                let fits = |t: f64| rest_min + a * t <= hi + TOL && rest_max + a * t >= lo - TOL;
                let (zero, one) = (fits(0.0), fits(1.0));
                if zero && one {
                    continue;
                }
                let why = row_reason(k, &reason);
                if !zero && !one {
                    return Presolved::Infeasible(why);
                }
                let value = if one { 1.0 } else { 0.0 };
                lb[j] = value;
                ub[j] = value;
                reason[j] = reason[j].union(why);
                changed = true;
                // bounds changed under the cached activity
                break;
            }
        }
    }

    let mut cols = Vec::new();
    let mut col_of = vec![usize::MAX; n];
    let mut fixed = vec![0.0; n];
    let mut offset = 0.0;
    let mut cost = vec![0.0; n];
    for &(v, c) in &model.objective {
        cost[v.0] += c;
    }
    for j in 0..n {
        if lb[j] == ub[j] {
            fixed[j] = lb[j];
            offset += cost[j] * lb[j];
        } else {
            col_of[j] = cols.len();
            cols.push(j);
        }
    }
    let mut lp = LpProblem {
        rows: 0,
        cols: vec![Vec::new(); cols.len()],
        cost: cols.iter().map(|&j| cost[j]).collect(),
        lower: cols.iter().map(|&j| lb[j]).collect(),
        upper: cols.iter().map(|&j| ub[j]).collect(),
        row_lower: Vec::new(),
        row_upper: Vec::new(),
    };
    let mut rows = Vec::new();
    for (k, c) in model.constraints.iter().enumerate() {
        if !active[k] {
            continue;
        }
        let mut shift = 0.0;
        let mut any = false;
        for &(v, a) in &c.terms {
            if col_of[v.0] == usize::MAX {
                shift += a * fixed[v.0];
            } else {
                any = true;
            }
        }
        let (lo, hi) = row_bounds(c.relation, c.rhs);
        if !any {
            if shift < lo - INFEASIBLE_TOL || shift > hi + INFEASIBLE_TOL {
                return Presolved::Infeasible(row_reason(k, &reason));
            }
            continue;
        }
        let r = rows.len();
        for &(v, a) in &c.terms {
            if col_of[v.0] != usize::MAX {
                lp.cols[col_of[v.0]].push((r, a));
            }
        }
        lp.row_lower.push(lo - shift);
        lp.row_upper.push(hi - shift);
        rows.push(k);
    }
    lp.rows = rows.len();
    let reasons = cols.iter().map(|&j| reason[j]).collect();
    Presolved::Reduced(Reduced {
        lp,
        cols,
        rows,
        fixed,
        offset,
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::VarKey;

    fn bounds(m: &MipModel) -> (Vec<f64>, Vec<f64>) {
        (
            m.variables.iter().map(|v| v.lower).collect(),
            m.variables.iter().map(|v| v.upper).collect(),
        )
    }

    #[test]
    fn singleton_rows_become_bounds() {
        let mut m = MipModel::new();
        let x = m.add_continuous(VarKey::External("x".into()));
        let y = m.add_continuous(VarKey::External("y".into()));
        m.add_constraint(vec![(x, 2.0)], Relation::Ge, 3.0, Family::External, "a".into());
        m.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 4.0, Family::External, "b".into());
        let (lb, ub) = bounds(&m);
        let Presolved::Reduced(r) = presolve(&m, &lb, &ub, true) else {
            panic!("infeasible")
        };
        assert_eq!(r.lp.rows, 1);
        assert_eq!(r.lp.lower[0], 1.5);
    }

    #[test]
    fn binary_fixing_cascades_to_infeasibility() {
        let mut m = MipModel::new();
        let a = m.add_binary(VarKey::External("a".into()));
        let b = m.add_binary(VarKey::External("b".into()));
        m.add_constraint(vec![(a, 1.0), (b, 1.0)], Relation::Eq, 1.0, Family::MapNode, "u".into());
        m.add_constraint(vec![(a, 1.0)], Relation::Le, 0.0, Family::Allowed, "u,A".into());
        m.add_constraint(vec![(b, 1.0)], Relation::Le, 0.0, Family::Allowed, "u,B".into());
        let (lb, ub) = bounds(&m);
        match presolve(&m, &lb, &ub, true) {
            Presolved::Infeasible(mask) => {
                assert_eq!(mask.families(), vec![Family::MapNode, Family::Allowed]);
            }
            Presolved::Reduced(_) => panic!("expected infeasible"),
        }
    }

    #[test]
    fn fixed_variables_are_substituted() {
        let mut m = MipModel::new();
        let a = m.add_binary(VarKey::External("a".into()));
        let x = m.add_continuous(VarKey::External("x".into()));
        let y = m.add_continuous(VarKey::External("y".into()));
        m.add_constraint(vec![(x, 1.0), (y, 1.0), (a, -5.0)], Relation::Ge, 0.0, Family::External, "r".into());
        m.set_objective(vec![(a, 2.0), (x, 1.0)]);
        let (mut lb, ub) = bounds(&m);
        lb[a.0] = 1.0;
        let Presolved::Reduced(r) = presolve(&m, &lb, &ub, true) else {
            panic!("infeasible")
        };
        assert_eq!(r.offset, 2.0);
        assert_eq!(r.cols, vec![1, 2]);
        assert_eq!(r.lp.row_lower, vec![5.0]);
    }
}
