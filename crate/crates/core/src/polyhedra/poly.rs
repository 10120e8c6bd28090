//! Conjunctions of quasi-affine constraints: the shared core behind basic
//! sets and basic maps.
//!
//! Variables `0..n_dim` are the tuple dimensions; `n_dim..n_dim + n_ex` are
//! existentially quantified. Every public operation eliminates existentials
//! before returning, so normal-form values carry `n_ex == 0`.

use rustc_hash::{FxHashMap, FxHashSet};
use std::sync::Arc;

use super::constraint::{Constraint, ConstraintKind, Normalized};
use super::error::PolyError;
use super::expr::{AffineExpr, Div};
use super::lp::{self, Feasibility};

const ILP_NODE_LIMIT: usize = 400;
const ELIM_STEP_LIMIT: usize = 400;
const ELIM_CONSTRAINT_LIMIT: usize = 4000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polyhedron {
    pub(crate) n_dim: usize,
    pub(crate) n_ex: usize,
    pub(crate) cons: Vec<Constraint>,
    pub(crate) empty: bool,
}

impl Polyhedron {
    pub fn universe(n_dim: usize) -> Self {
        Polyhedron { n_dim, n_ex: 0, cons: Vec::new(), empty: false }
    }

    pub fn empty(n_dim: usize) -> Self {
        Polyhedron { n_dim, n_ex: 0, cons: Vec::new(), empty: true }
    }

    pub fn from_constraints(n_dim: usize, cons: Vec<Constraint>) -> Self {
        let mut p = Polyhedron { n_dim, n_ex: 0, cons, empty: false };
        p.simplify();
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n_dim + self.n_ex
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn is_marked_empty(&self) -> bool {
        self.empty
    }

    pub fn add(&mut self, c: Constraint) {
        debug_assert_eq!(c.expr.n_vars(), self.n_vars());
        self.cons.push(c);
    }

    pub fn with(&self, c: Constraint) -> Self {
        let mut p = self.clone();
        p.add(c);
        p.simplify();
        p
    }

    /// Conjunction of two polyhedra over the same dimensions. Existentials of
    /// both sides are kept (appended).
    pub fn intersect(&self, o: &Polyhedron) -> Polyhedron {
        assert_eq!(self.n_dim, o.n_dim);
        if self.empty || o.empty {
            return Polyhedron::empty(self.n_dim);
        }
        let n_new = self.n_dim + self.n_ex + o.n_ex;
        let mine = AffineExpr::embedding(self.n_vars(), n_new, Some);
        let theirs = AffineExpr::embedding(o.n_vars(), n_new, |i| {
            Some(if i < o.n_dim { i } else { i + self.n_ex })
        });
        let mut cons: Vec<Constraint> =
            self.cons.iter().map(|c| c.substitute(&mine, n_new)).collect();
        cons.extend(o.cons.iter().map(|c| c.substitute(&theirs, n_new)));
        let mut p = Polyhedron { n_dim: self.n_dim, n_ex: self.n_ex + o.n_ex, cons, empty: false };
        p.simplify();
        p
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        assert_eq!(self.n_ex, 0, "membership test on a polyhedron with existentials");
        !self.empty && self.cons.iter().all(|c| c.holds(point))
    }

    /// Substitutes variables and rebuilds, keeping `n_ex` existentials.
    pub(crate) fn substituted(&self, subs: &[AffineExpr], n_dim: usize, n_ex: usize) -> Polyhedron {
        let n = n_dim + n_ex;
        let cons = self.cons.iter().map(|c| c.substitute(subs, n)).collect();
        let mut p = Polyhedron { n_dim, n_ex, cons, empty: self.empty };
        p.simplify();
        p
    }

    // ---------------------------------------------------------------------
    // simplification

    /// Normalises constraints, merges parallel ones, detects trivial
    /// contradictions and pivots unit-coefficient equalities.
    pub fn simplify(&mut self) {
        if self.empty {
            self.cons.clear();
            return;
        }
        for _round in 0..8 {
            if !self.normalize_all() {
                return;
            }
            let pivoted = self.pivot_equalities();
            if self.empty {
                self.cons.clear();
                return;
            }
            let merged = self.merge_parallel();
            if self.empty {
                self.cons.clear();
                return;
            }
            if !pivoted && !merged {
                break;
            }
        }
        self.cons.sort();
        self.cons.dedup();
    }

    fn normalize_all(&mut self) -> bool {
        let mut out = Vec::with_capacity(self.cons.len());
        for c in std::mem::take(&mut self.cons) {
            match c.normalize() {
                Normalized::True => {}
                Normalized::False => {
                    self.empty = true;
                    return false;
                }
                Normalized::Keep(c) => out.push(c),
            }
        }
        self.cons = out;
        true
    }

    /// Uses equalities with a unit coefficient on some variable to eliminate
    /// that variable from all other constraints. Existential pivots remove
    /// the existential altogether. Returns whether anything changed.
    fn pivot_equalities(&mut self) -> bool {
        let mut changed = false;
        let mut done: Vec<usize> = Vec::new();
        loop {
            let n = self.n_vars();
            let mut pick = None;
            'outer: for (k, c) in self.cons.iter().enumerate() {
                if !c.is_eq() {
                    continue;
                }
                // Prefer existentials, then the highest dimension.
                for v in (0..n).rev() {
                    let a = c.expr.coeffs[v];
                    if a.abs() != 1 || done.contains(&v) || c.expr.var_in_divs(v) {
                        continue;
                    }
                    let used_elsewhere = self
                        .cons
                        .iter()
                        .enumerate()
                        .any(|(j, o)| j != k && o.expr.uses_var(v));
                    if v >= self.n_dim || used_elsewhere {
                        pick = Some((k, v));
                        break 'outer;
                    }
                }
            }
            let Some((k, v)) = pick else { break };
            changed = true;
            let c = self.cons[k].clone();
            let a = c.expr.coeffs[v];
            // a*v + rest = 0  =>  v = -a * rest
            let mut rest = c.expr.clone();
            rest.coeffs[v] = 0;
            let value = rest.scale(-a);
            if v >= self.n_dim {
                self.cons.remove(k);
                self.remove_var(v, &value);
            } else {
                let mut subs: Vec<AffineExpr> = (0..n).map(|i| AffineExpr::var(n, i)).collect();
                subs[v] = value;
                for (j, o) in self.cons.iter_mut().enumerate() {
                    if j != k && o.expr.uses_var(v) {
                        *o = o.substitute(&subs, n);
                    }
                }
                done.push(v);
            }
            if !self.normalize_all() {
                return true;
            }
        }
        changed
    }

    /// Removes variable `v` (an existential) by substituting `value` (which
    /// must not mention `v`).
    fn remove_var(&mut self, v: usize, value: &AffineExpr) {
        let n = self.n_vars();
        let new_n = n - 1;
        let shrink = |e: &AffineExpr| -> AffineExpr {
            let subs: Vec<AffineExpr> = (0..n)
                .map(|i| {
                    if i < v {
                        AffineExpr::var(new_n, i)
                    } else if i > v {
                        AffineExpr::var(new_n, i - 1)
                    } else {
                        AffineExpr::zero(new_n)
                    }
                })
                .collect();
            e.substitute(&subs, new_n)
        };
        let value_small = shrink(value);
        let mut subs: Option<Vec<AffineExpr>> = None;
        for c in &mut self.cons {
            if c.expr.divs.is_empty() {
                // Drop column v and add its multiple of the value directly.
                let k = c.expr.coeffs.remove(v);
                if k != 0 {
                    c.expr.add_scaled(&value_small, k);
                }
                continue;
            }
            let subs = subs.get_or_insert_with(|| {
                (0..n)
                    .map(|i| {
                        if i < v {
                            AffineExpr::var(new_n, i)
                        } else if i > v {
                            AffineExpr::var(new_n, i - 1)
                        } else {
                            value_small.clone()
                        }
                    })
                    .collect()
            });
            *c = c.substitute(subs, new_n);
        }
        self.n_ex -= 1;
    }

    fn merge_parallel(&mut self) -> bool {
        let mut changed = false;
        // linear part -> (index of tightest ineq)
        let mut ineq_best: FxHashMap<AffineExpr, i64> = FxHashMap::default();
        let mut eqs: FxHashMap<AffineExpr, i64> = FxHashMap::default();
        for c in &self.cons {
            let lin = c.expr.linear_part();
            match c.kind {
                ConstraintKind::Ineq => {
                    let e = ineq_best.entry(lin).or_insert(c.expr.constant);
                    if c.expr.constant < *e {
                        *e = c.expr.constant;
                    }
                }
                ConstraintKind::Eq => {
                    if let Some(&k) = eqs.get(&lin) {
                        if k != c.expr.constant {
                            self.empty = true;
                            return true;
                        }
                    }
                    eqs.insert(lin, c.expr.constant);
                }
            }
        }
        let mut out: Vec<Constraint> = Vec::new();
        for (lin, k) in &eqs {
            out.push(Constraint::eq(lin.add_constant(*k)));
        }
        let mut new_eqs: Vec<Constraint> = Vec::new();
        let mut skip: FxHashSet<AffineExpr> = FxHashSet::default();
        for (lin, &c1) in &ineq_best {
            if skip.contains(lin) {
                continue;
            }
            // against equalities
            if let Some(&k) = eqs.get(lin) {
                // lin = -k  => lin + c1 >= 0  <=> c1 - k >= 0
                if c1 - k < 0 {
                    self.empty = true;
                    return true;
                }
                changed = true;
                continue;
            }
            let neg = lin.neg();
            if let Some(&k) = eqs.get(&neg) {
                // lin = k (since -lin + k = 0) => k + c1 >= 0
                if k + c1 < 0 {
                    self.empty = true;
                    return true;
                }
                changed = true;
                continue;
            }
            if let Some(&c2) = ineq_best.get(&neg) {
                // lin + c1 >= 0 and -lin + c2 >= 0
                if c1 + c2 < 0 {
                    self.empty = true;
                    return true;
                }
                if c1 + c2 == 0 {
                    new_eqs.push(Constraint::eq(lin.add_constant(c1)));
                    skip.insert(neg.clone());
                    skip.insert(lin.clone());
                    changed = true;
                    continue;
                }
            }
            out.push(Constraint::ge(lin.add_constant(c1)));
        }
        out.extend(new_eqs);
        if out.len() != self.cons.len() {
            changed = true;
        }
        out.sort();
        self.cons = out;
        changed
    }

    // ---------------------------------------------------------------------
    // emptiness

    fn flattened(&self) -> lp::Flattened {
        lp::flatten(self.n_vars(), &self.cons)
    }

    /// Exact integer emptiness when decidable within the search budget.
    pub fn is_empty_exact(&self) -> Option<bool> {
        if self.empty {
            return Some(true);
        }
        if self.cons.is_empty() {
            return Some(false);
        }
        match lp::integer_feasible(&self.flattened(), ILP_NODE_LIMIT) {
            Feasibility::Feasible => Some(false),
            Feasibility::Infeasible => Some(true),
            Feasibility::Unknown => None,
        }
    }

    /// True only when the polyhedron is proven to contain no integer point.
    pub fn is_empty(&self) -> bool {
        self.is_empty_exact() == Some(true)
    }

    /// Cheaper test using only the rational relaxation.
    pub fn is_rationally_empty(&self) -> bool {
        if self.empty {
            return true;
        }
        lp::rational_feasible(&self.flattened()) == Feasibility::Infeasible
    }

    // ---------------------------------------------------------------------
    // existential elimination

    /// Adds `k` fresh existential variables.
    pub(crate) fn add_existentials(&self, k: usize) -> Polyhedron {
        let n = self.n_vars();
        let subs = AffineExpr::embedding(n, n + k, Some);
        let cons = self.cons.iter().map(|c| c.substitute(&subs, n + k)).collect();
        Polyhedron { n_dim: self.n_dim, n_ex: self.n_ex + k, cons, empty: self.empty }
    }

    /// Turns the dimensions selected by `drop` into existentials (keeping the
    /// relative order of the remaining dimensions).
    pub(crate) fn dims_to_existentials(&self, drop: &[bool]) -> Polyhedron {
        assert_eq!(self.n_ex, 0);
        let kept: Vec<usize> = (0..self.n_dim).filter(|&i| !drop[i]).collect();
        let dropped: Vec<usize> = (0..self.n_dim).filter(|&i| drop[i]).collect();
        let n = self.n_dim;
        let mut target = vec![0usize; n];
        for (k, &i) in kept.iter().enumerate() {
            target[i] = k;
        }
        for (k, &i) in dropped.iter().enumerate() {
            target[i] = kept.len() + k;
        }
        let subs = AffineExpr::embedding(n, n, |i| Some(target[i]));
        let cons = self.cons.iter().map(|c| c.substitute(&subs, n)).collect();
        Polyhedron { n_dim: kept.len(), n_ex: dropped.len(), cons, empty: self.empty }
    }

    /// Exact integer projection of all existentials.
    ///
    /// Variables appearing inside floor terms are first lifted: the floor
    /// atom becomes a new existential `t` with `0 <= inner - d*t < d`. Then a
    /// variable is removed through an equality, or by Fourier-Motzkin where
    /// each lower/upper bound pair `L <= U` is expressed with floor terms,
    /// which keeps the projection exact over the integers.
    pub fn eliminate_existentials(&mut self) -> Result<(), PolyError> {
        self.simplify();
        let mut steps = 0usize;
        while self.n_ex > 0 {
            if self.empty {
                self.n_ex = 0;
                self.cons.clear();
                return Ok(());
            }
            steps += 1;
            if steps > ELIM_STEP_LIMIT || self.cons.len() > ELIM_CONSTRAINT_LIMIT {
                return Err(PolyError::Elimination);
            }
            let v = self.choose_existential();
            if self.cons.iter().any(|c| c.expr.var_in_divs(v)) {
                self.lift_div_containing(v);
                self.simplify();
                continue;
            }
            if let Some(k) = self.cons.iter().position(|c| c.is_eq() && c.expr.coeffs[v] != 0) {
                let c = self.cons.remove(k);
                let mut a = c.expr.coeffs[v];
                let mut rest = c.expr.clone();
                rest.coeffs[v] = 0;
                if a < 0 {
                    a = -a;
                    rest = rest.neg();
                }
                // a*v + rest = 0  =>  v = -rest / a, requiring a | rest
                let num = rest.neg();
                let value = num.floor_div(a);
                if a != 1 {
                    self.cons.push(Constraint::eq(num.sub(&value.scale(a))));
                }
                self.remove_var(v, &value);
                self.simplify();
                continue;
            }
            self.fourier_motzkin(v);
            self.simplify();
        }
        Ok(())
    }

    fn choose_existential(&self) -> usize {
        let mut best = (usize::MAX, self.n_dim);
        for v in self.n_dim..self.n_vars() {
            let mut in_div = false;
            let mut unit_eq = false;
            let mut eq = false;
            let (mut lo, mut hi) = (0usize, 0usize);
            for c in &self.cons {
                if c.expr.var_in_divs(v) {
                    in_div = true;
                }
                let a = c.expr.coeffs[v];
                if a == 0 {
                    continue;
                }
                if c.is_eq() {
                    eq = true;
                    if a.abs() == 1 && !c.expr.var_in_divs(v) {
                        unit_eq = true;
                    }
                } else if a > 0 {
                    lo += 1;
                } else {
                    hi += 1;
                }
            }
            let score = if unit_eq {
                0
            } else if eq && !in_div {
                1
            } else if in_div {
                1_000_000
            } else {
                2 + lo * hi
            };
            if score < best.0 {
                best = (score, v);
            }
        }
        best.1
    }

    /// Replaces one innermost floor atom whose argument uses `v` by a fresh
    /// existential.
    fn lift_div_containing(&mut self, v: usize) {
        let mut atoms: Vec<Arc<Div>> = Vec::new();
        for c in &self.cons {
            c.expr.collect_atoms(&mut atoms);
        }
        // collect_atoms lists inner atoms first, so the first match is innermost.
        let atom = atoms
            .into_iter()
            .find(|a| a.inner.uses_var(v))
            .expect("variable inside a floor term");
        let mut p = self.add_existentials(1);
        let n = p.n_vars();
        let t = n - 1;
        let tv = AffineExpr::var(n, t);
        let ident: Vec<AffineExpr> = (0..n - 1).map(|i| AffineExpr::var(n, i)).collect();
        // atom expressed in the new variable space
        let lifted_inner = atom.inner.substitute(&ident, n);
        let target = Div { inner: lifted_inner.clone(), divisor: atom.divisor };
        let mut hook = |a: &Arc<Div>| if **a == target { Some(tv.clone()) } else { None };
        let full_ident: Vec<AffineExpr> = (0..n).map(|i| AffineExpr::var(n, i)).collect();
        let mut cons: Vec<Constraint> = p
            .cons
            .iter()
            .map(|c| Constraint { kind: c.kind, expr: c.expr.rewrite(&full_ident, n, &mut hook) })
            .collect();
        let d = atom.divisor;
        let inner = lifted_inner.rewrite(&full_ident, n, &mut hook);
        cons.push(Constraint::ge(inner.sub(&tv.scale(d))));
        cons.push(Constraint::ge(tv.scale(d).add_constant(d - 1).sub(&inner)));
        p.cons = cons;
        *self = p;
    }

    fn fourier_motzkin(&mut self, v: usize) {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut rest = Vec::new();
        for c in self.cons.drain(..) {
            let a = c.expr.coeffs[v];
            if a == 0 {
                rest.push(c);
            } else {
                debug_assert!(!c.is_eq());
                let mut r = c.expr.clone();
                r.coeffs[v] = 0;
                if a > 0 {
                    lower.push((a, r));
                } else {
                    upper.push((-a, r));
                }
            }
        }
        // lower: a*v + r >= 0  ->  v >= ceil(-r/a)
        // upper: -b*v + s >= 0 ->  v <= floor(s/b)
        for (a, r) in &lower {
            for (b, s) in &upper {
                let e = if *a == 1 || *b == 1 {
                    s.scale(*a).add(&r.scale(*b))
                } else {
                    // -floor(r/a) <= floor(s/b)
                    r.floor_div(*a).add(&s.floor_div(*b))
                };
                rest.push(Constraint::ge(e));
            }
        }
        self.cons = rest;
        let zero = AffineExpr::zero(self.n_vars());
        self.remove_var(v, &zero);
    }

    // ---------------------------------------------------------------------
    // set difference

    /// `self \ other` as a list of pairwise disjoint polyhedra. Both operands
    /// must be free of existentials.
    pub fn subtract(&self, other: &Polyhedron) -> Vec<Polyhedron> {
        assert_eq!(self.n_ex, 0);
        assert_eq!(other.n_ex, 0);
        if self.empty {
            return Vec::new();
        }
        if other.empty {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut cur = self.clone();
        let mut split: Vec<Constraint> = Vec::new();
        for c in &other.cons {
            match c.kind {
                ConstraintKind::Ineq => split.push(c.clone()),
                ConstraintKind::Eq => {
                    split.push(Constraint::ge(c.expr.clone()));
                    split.push(Constraint::ge(c.expr.neg()));
                }
            }
        }
        for c in split {
            let neg = c.complement().pop().unwrap();
            let outside = cur.with(neg);
            if outside.is_empty() {
                // c already implied by cur
                continue;
            }
            out.push(outside);
            cur = cur.with(c);
            if cur.is_empty() {
                return out;
            }
        }
        out
    }
}

impl Polyhedron {
    /// Drops inequalities implied by the remaining constraints.
    pub fn remove_redundant(&mut self) {
        if self.empty {
            return;
        }
        if self.is_empty() {
            *self = Polyhedron { n_dim: self.n_dim, n_ex: self.n_ex, cons: Vec::new(), empty: true };
            return;
        }
        let mut i = 0;
        while i < self.cons.len() {
            if self.cons[i].is_eq() {
                i += 1;
                continue;
            }
            let mut test = self.clone();
            let c = test.cons.remove(i);
            test.cons.extend(c.complement());
            if test.is_empty() {
                self.cons.remove(i);
            } else {
                i += 1;
            }
        }
    }
}

/// Turns a list of possibly overlapping polyhedra into a pairwise disjoint
/// list covering the same points.
pub(crate) fn disjointify(list: Vec<Polyhedron>) -> Vec<Polyhedron> {
    let mut out: Vec<Polyhedron> = Vec::new();
    for p in list {
        if p.empty {
            continue;
        }
        let mut parts = vec![p];
        for r in &out {
            let mut next = Vec::new();
            for part in parts {
                if part.intersect(r).is_empty() {
                    next.push(part);
                } else {
                    next.extend(part.subtract(r));
                }
            }
            parts = next;
            if parts.is_empty() {
                break;
            }
        }
        for mut part in parts {
            part.remove_redundant();
            out.push(part);
        }
    }
    coalesce(out)
}

/// `a` minus the union of `bs`, as disjoint pieces.
pub(crate) fn subtract_all(a: &Polyhedron, bs: &[Polyhedron]) -> Vec<Polyhedron> {
    let mut parts = vec![a.clone()];
    for b in bs {
        let mut next = Vec::new();
        for part in parts {
            if part.intersect(b).is_empty() {
                next.push(part);
            } else {
                next.extend(part.subtract(b));
            }
        }
        parts = next;
        if parts.is_empty() {
            break;
        }
    }
    for p in &mut parts {
        p.remove_redundant();
    }
    parts
}

/// Merges disjoint pieces that differ only in one constraint and its
/// complement. Best effort; never changes the covered points.
pub(crate) fn coalesce(list: Vec<Polyhedron>) -> Vec<Polyhedron> {
    coalesce_with(list, false)
}

/// Like [`coalesce`], also trying hulls of constraints valid on both sides.
/// Slower; meant for final results.
pub(crate) fn coalesce_thorough(list: Vec<Polyhedron>) -> Vec<Polyhedron> {
    coalesce_with(list, true)
}

fn coalesce_with(mut list: Vec<Polyhedron>, thorough: bool) -> Vec<Polyhedron> {
    loop {
        let mut merged = None;
        'search: for i in 0..list.len() {
            for j in i + 1..list.len() {
                if let Some(m) = merge_pair(&list[i], &list[j], thorough) {
                    merged = Some((i, j, m));
                    break 'search;
                }
            }
        }
        match merged {
            Some((i, j, m)) => {
                list.remove(j);
                list[i] = m;
            }
            None => return list,
        }
    }
}

fn merge_pair(a: &Polyhedron, b: &Polyhedron, thorough: bool) -> Option<Polyhedron> {
    if a.n_ex != 0 || b.n_ex != 0 || a.empty || b.empty {
        return None;
    }
    let only_a: Vec<&Constraint> = a.cons.iter().filter(|c| !b.cons.contains(c)).collect();
    let only_b: Vec<&Constraint> = b.cons.iter().filter(|c| !a.cons.contains(c)).collect();
    if only_a.len() != 1 || only_b.len() != 1 {
        return if thorough { merge_by_valid_constraints(a, b) } else { None };
    }
    let (x, y) = (only_a[0], only_b[0]);
    let common: Vec<Constraint> = a.cons.iter().filter(|c| *c != x).cloned().collect();
    let joined = |extra: Option<Constraint>| {
        let mut cons = common.clone();
        cons.extend(extra);
        Some(Polyhedron::from_constraints(a.n_dim, cons))
    };
    match (x.kind, y.kind) {
        (ConstraintKind::Ineq, ConstraintKind::Ineq) => {
            if y.expr == x.expr.neg().add_constant(-1) {
                return joined(None);
            }
            None
        }
        (ConstraintKind::Eq, ConstraintKind::Ineq) | (ConstraintKind::Ineq, ConstraintKind::Eq) => {
            let (e, i) = if x.is_eq() { (x, y) } else { (y, x) };
            // e = 0 together with e - 1 >= 0 gives e >= 0; with -e - 1 >= 0 gives -e >= 0.
            if i.expr == e.expr.add_constant(-1) {
                return joined(Some(Constraint::ge(e.expr.clone())));
            }
            if i.expr == e.expr.neg().add_constant(-1) {
                return joined(Some(Constraint::ge(e.expr.neg())));
            }
            None
        }
        _ => None,
    }
}

/// Candidate hull from the constraints of each side that hold on the
/// other; accepted only when it adds no integer point.
fn merge_by_valid_constraints(a: &Polyhedron, b: &Polyhedron) -> Option<Polyhedron> {
    let halves = |p: &Polyhedron| -> Vec<Constraint> {
        p.cons
            .iter()
            .flat_map(|c| {
                if c.is_eq() {
                    vec![Constraint::ge(c.expr.clone()), Constraint::ge(c.expr.neg())]
                } else {
                    vec![c.clone()]
                }
            })
            .collect()
    };
    let holds_on = |c: &Constraint, p: &Polyhedron| {
        let mut q = p.clone();
        q.add(Constraint::ge(c.expr.neg().add_constant(-1)));
        q.simplify();
        q.is_empty()
    };
    let mut cons: Vec<Constraint> = halves(a).into_iter().filter(|c| holds_on(c, b)).collect();
    cons.extend(halves(b).into_iter().filter(|c| holds_on(c, a)));
    let mut u = Polyhedron::from_constraints(a.n_dim, cons);
    u.simplify();
    if subtract_all(&u, &[a.clone(), b.clone()]).iter().all(|r| r.is_empty()) {
        u.remove_redundant();
        Some(u)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: usize, i: usize) -> AffineExpr {
        AffineExpr::var(n, i)
    }

    #[test]
    fn parallel_bounds_become_equality() {
        let n = 1;
        let p = Polyhedron::from_constraints(
            n,
            vec![Constraint::ge(v(n, 0).add_constant(-2)), Constraint::ge(v(n, 0).neg().add_constant(2))],
        );
        assert_eq!(p.cons.len(), 1);
        assert!(p.cons[0].is_eq());
    }

    #[test]
    fn projection_of_strided_set() {
        // { [j] : exists i: j = 2i and 0 <= i < 3 }
        let n = 2;
        let p = Polyhedron {
            n_dim: 1,
            n_ex: 1,
            cons: vec![
                Constraint::eq(v(n, 0).sub(&v(n, 1).scale(2))),
                Constraint::ge(v(n, 1)),
                Constraint::ge(v(n, 1).neg().add_constant(2)),
            ],
            empty: false,
        };
        let mut q = p.clone();
        q.eliminate_existentials().unwrap();
        assert_eq!(q.n_ex, 0);
        let pts: Vec<i64> = (-3..8).filter(|&j| q.contains(&[j])).collect();
        assert_eq!(pts, vec![0, 2, 4]);
    }

    #[test]
    fn fm_with_non_unit_coefficients_is_exact() {
        // exists y: 3y >= x and 3y <= x + 1  <=> x mod 3 in {0, 2}
        let n = 2;
        let p = Polyhedron {
            n_dim: 1,
            n_ex: 1,
            cons: vec![
                Constraint::ge(v(n, 1).scale(3).sub(&v(n, 0))),
                Constraint::ge(v(n, 0).add_constant(1).sub(&v(n, 1).scale(3))),
                Constraint::ge(v(n, 0).scale(2).sub(&v(n, 1).scale(5)).add_constant(4)),
            ],
            empty: false,
        };
        let mut q = p.clone();
        q.eliminate_existentials().unwrap();
        for x in -10..10 {
            let brute = (-20..20).any(|y| 3 * y >= x && 3 * y <= x + 1 && 2 * x - 5 * y + 4 >= 0);
            assert_eq!(q.contains(&[x]), brute, "x = {x}");
        }
    }

    #[test]
    fn subtraction_is_disjoint_and_exact() {
        let n = 1;
        let a = Polyhedron::from_constraints(
            n,
            vec![Constraint::ge(v(n, 0)), Constraint::ge(v(n, 0).neg().add_constant(3))],
        );
        let b = Polyhedron::from_constraints(n, vec![Constraint::eq(v(n, 0).add_constant(-2))]);
        let parts = a.subtract(&b);
        let mut pts = Vec::new();
        for p in &parts {
            for x in -5..10 {
                if p.contains(&[x]) {
                    pts.push(x);
                }
            }
        }
        pts.sort();
        assert_eq!(pts, vec![0, 1, 3]);
    }
}
