//! Exact integer feasibility: a bounded general simplex (Bland pivoting)
//! over `i128` rationals plus depth-first branch and bound.
//!
//! Floor atoms are flattened into auxiliary integer columns `t` constrained
//! by `0 <= inner - d*t <= d - 1`. Any arithmetic overflow or an exhausted
//! node budget yields [`Feasibility::Unknown`]; callers must then treat the
//! system as possibly non-empty.

use std::collections::HashMap;
use std::sync::Arc;

use super::constraint::{Constraint, ConstraintKind};
use super::expr::{AffineExpr, Div};
use super::int::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Feasibility {
    Feasible,
    Infeasible,
    Unknown,
}

/// A linear row `coeffs . x` with bounds `lo <= row <= hi`.
#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub coeffs: Vec<i64>,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

pub(crate) struct Flattened {
    pub n_cols: usize,
    pub rows: Vec<Row>,
    /// Set when a row is trivially violated.
    pub trivially_false: bool,
}

/// Flattens quasi-affine constraints over `n_vars` variables into linear
/// rows over variables plus one column per floor atom.
pub(crate) fn flatten(n_vars: usize, cons: &[Constraint]) -> Flattened {
    let mut atoms: Vec<Arc<Div>> = Vec::new();
    for c in cons {
        c.expr.collect_atoms(&mut atoms);
    }
    let index: HashMap<&Div, usize> =
        atoms.iter().enumerate().map(|(k, a)| (a.as_ref(), n_vars + k)).collect();
    let n_cols = n_vars + atoms.len();
    let linear = |e: &AffineExpr| -> Vec<i64> {
        let mut v = vec![0i64; n_cols];
        v[..n_vars].copy_from_slice(&e.coeffs);
        for (a, c) in &e.divs {
            v[index[a.as_ref()]] += *c;
        }
        v
    };
    let mut rows = Vec::with_capacity(cons.len() + atoms.len());
    let mut trivially_false = false;
    for c in cons {
        let coeffs = linear(&c.expr);
        let k = c.expr.constant;
        if coeffs.iter().all(|&x| x == 0) {
            let ok = match c.kind {
                ConstraintKind::Eq => k == 0,
                ConstraintKind::Ineq => k >= 0,
            };
            if !ok {
                trivially_false = true;
            }
            continue;
        }
        let (lo, hi) = match c.kind {
            ConstraintKind::Eq => (Some(-k), Some(-k)),
            ConstraintKind::Ineq => (Some(-k), None),
        };
        rows.push(Row { coeffs, lo, hi });
    }
    for (k, a) in atoms.iter().enumerate() {
        let mut coeffs = linear(&a.inner);
        coeffs[n_vars + k] -= a.divisor;
        let c = a.inner.constant;
        rows.push(Row { coeffs, lo: Some(-c), hi: Some(a.divisor - 1 - c) });
    }
    Flattened { n_cols, rows, trivially_false }
}

#[derive(Clone)]
struct Simplex {
    n_cols: usize,
    n_vars: usize,
    lower: Vec<Option<Rat>>,
    upper: Vec<Option<Rat>>,
    value: Vec<Rat>,
    /// `row_var[r]` is the basic variable defined by tableau row `r`.
    row_var: Vec<usize>,
    /// `basic_row[x]` is the row of basic variable `x`.
    basic_row: Vec<Option<usize>>,
    tableau: Vec<Vec<Rat>>,
}

enum Step {
    Sat,
    Unsat,
    Overflow,
}

impl Simplex {
    fn new(f: &Flattened) -> Option<Simplex> {
        let n_cols = f.n_cols;
        let m = f.rows.len();
        let n_vars = n_cols + m;
        let mut lower = vec![None; n_vars];
        let mut upper = vec![None; n_vars];
        let mut tableau = Vec::with_capacity(m);
        let mut row_var = Vec::with_capacity(m);
        let mut basic_row = vec![None; n_vars];
        let mut value = vec![Rat::ZERO; n_vars];
        for (r, row) in f.rows.iter().enumerate() {
            let x = n_cols + r;
            lower[x] = row.lo.map(|v| Rat::int(v as i128));
            upper[x] = row.hi.map(|v| Rat::int(v as i128));
            let mut t = vec![Rat::ZERO; n_vars];
            for (j, &c) in row.coeffs.iter().enumerate() {
                t[j] = Rat::int(c as i128);
            }
            tableau.push(t);
            row_var.push(x);
            basic_row[x] = Some(r);
            value[x] = Rat::ZERO;
        }
        Some(Simplex { n_cols, n_vars, lower, upper, value, row_var, basic_row, tableau })
    }

    fn below(&self, x: usize) -> Option<bool> {
        match self.lower[x] {
            Some(l) => Some(self.value[x].cmp(l)? == std::cmp::Ordering::Less),
            None => Some(false),
        }
    }

    fn above(&self, x: usize) -> Option<bool> {
        match self.upper[x] {
            Some(u) => Some(self.value[x].cmp(u)? == std::cmp::Ordering::Greater),
            None => Some(false),
        }
    }

    fn can_increase(&self, x: usize) -> Option<bool> {
        match self.upper[x] {
            Some(u) => Some(self.value[x].cmp(u)? == std::cmp::Ordering::Less),
            None => Some(true),
        }
    }

    fn can_decrease(&self, x: usize) -> Option<bool> {
        match self.lower[x] {
            Some(l) => Some(self.value[x].cmp(l)? == std::cmp::Ordering::Greater),
            None => Some(true),
        }
    }

    /// Moves nonbasic `x` to value `v`, updating basic values.
    fn update(&mut self, x: usize, v: Rat) -> Option<()> {
        let delta = v.sub(self.value[x])?;
        for r in 0..self.tableau.len() {
            let a = self.tableau[r][x];
            if !a.is_zero() {
                let b = self.row_var[r];
                self.value[b] = self.value[b].add(a.mul(delta)?)?;
            }
        }
        self.value[x] = v;
        Some(())
    }

    fn pivot_and_update(&mut self, xi: usize, xj: usize, v: Rat) -> Option<()> {
        let r = self.basic_row[xi].expect("basic");
        let a = self.tableau[r][xj];
        let theta = v.sub(self.value[xi])?.div(a)?;
        self.value[xi] = v;
        self.value[xj] = self.value[xj].add(theta)?;
        for s in 0..self.tableau.len() {
            if s == r {
                continue;
            }
            let c = self.tableau[s][xj];
            if !c.is_zero() {
                let b = self.row_var[s];
                self.value[b] = self.value[b].add(c.mul(theta)?)?;
            }
        }
        // Row r: xi = sum a_k x_k  =>  xj = (xi - sum_{k != j} a_k x_k) / a
        let inv = Rat::int(1).div(a)?;
        let mut new_row = vec![Rat::ZERO; self.n_vars];
        for k in 0..self.n_vars {
            if k == xj {
                continue;
            }
            let c = self.tableau[r][k];
            if !c.is_zero() {
                new_row[k] = c.neg()?.mul(inv)?;
            }
        }
        new_row[xi] = inv;
        for s in 0..self.tableau.len() {
            if s == r {
                continue;
            }
            let c = self.tableau[s][xj];
            if c.is_zero() {
                continue;
            }
            self.tableau[s][xj] = Rat::ZERO;
            for k in 0..self.n_vars {
                let nk = new_row[k];
                if !nk.is_zero() {
                    self.tableau[s][k] = self.tableau[s][k].add(c.mul(nk)?)?;
                }
            }
        }
        self.tableau[r] = new_row;
        self.row_var[r] = xj;
        self.basic_row[xj] = Some(r);
        self.basic_row[xi] = None;
        Some(())
    }

    fn check(&mut self) -> Step {
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > 10_000 {
                return Step::Overflow;
            }
            // Smallest basic variable violating a bound.
            let mut viol = None;
            for x in 0..self.n_vars {
                if self.basic_row[x].is_none() {
                    continue;
                }
                let (Some(b), Some(a)) = (self.below(x), self.above(x)) else {
                    return Step::Overflow;
                };
                if b || a {
                    viol = Some((x, b));
                    break;
                }
            }
            let Some((xi, is_below)) = viol else { return Step::Sat };
            let r = self.basic_row[xi].unwrap();
            let mut chosen = None;
            for xj in 0..self.n_vars {
                if self.basic_row[xj].is_some() {
                    continue;
                }
                let a = self.tableau[r][xj];
                if a.is_zero() {
                    continue;
                }
                let pos = a.cmp(Rat::ZERO) == Some(std::cmp::Ordering::Greater);
                let ok = if is_below == pos { self.can_increase(xj) } else { self.can_decrease(xj) };
                match ok {
                    Some(true) => {
                        chosen = Some(xj);
                        break;
                    }
                    Some(false) => {}
                    None => return Step::Overflow,
                }
            }
            let Some(xj) = chosen else { return Step::Unsat };
            let target = if is_below { self.lower[xi].unwrap() } else { self.upper[xi].unwrap() };
            if self.pivot_and_update(xi, xj, target).is_none() {
                return Step::Overflow;
            }
        }
    }

    fn set_bound(&mut self, x: usize, lo: Option<Rat>, hi: Option<Rat>) -> Option<()> {
        if let Some(l) = lo {
            self.lower[x] = Some(match self.lower[x] {
                Some(o) if o.cmp(l)? == std::cmp::Ordering::Greater => o,
                _ => l,
            });
        }
        if let Some(h) = hi {
            self.upper[x] = Some(match self.upper[x] {
                Some(o) if o.cmp(h)? == std::cmp::Ordering::Less => o,
                _ => h,
            });
        }
        if self.basic_row[x].is_none() {
            if self.below(x)? {
                self.update(x, self.lower[x].unwrap())?;
            } else if self.above(x)? {
                self.update(x, self.upper[x].unwrap())?;
            }
        }
        Some(())
    }
}

/// Rational relaxation only.
pub(crate) fn rational_feasible(f: &Flattened) -> Feasibility {
    if f.trivially_false {
        return Feasibility::Infeasible;
    }
    let Some(mut s) = Simplex::new(f) else { return Feasibility::Unknown };
    match s.check() {
        Step::Sat => Feasibility::Feasible,
        Step::Unsat => Feasibility::Infeasible,
        Step::Overflow => Feasibility::Unknown,
    }
}

/// Integer feasibility by branch and bound with a node budget.
pub(crate) fn integer_feasible(f: &Flattened, node_limit: usize) -> Feasibility {
    if f.trivially_false {
        return Feasibility::Infeasible;
    }
    let Some(root) = Simplex::new(f) else { return Feasibility::Unknown };
    let mut stack = vec![root];
    let mut nodes = 0usize;
    let mut unknown = false;
    while let Some(mut s) = stack.pop() {
        nodes += 1;
        if nodes > node_limit {
            return Feasibility::Unknown;
        }
        match s.check() {
            Step::Unsat => continue,
            Step::Overflow => {
                unknown = true;
                continue;
            }
            Step::Sat => {}
        }
        let frac = (0..s.n_cols).find(|&x| !s.value[x].is_integer());
        let Some(x) = frac else { return Feasibility::Feasible };
        let v = s.value[x];
        let mut down = s.clone();
        let ok_down = down.set_bound(x, None, Some(Rat::int(v.floor())));
        let ok_up = s.set_bound(x, Some(Rat::int(v.ceil())), None);
        match (ok_up, ok_down) {
            (Some(()), Some(())) => {
                stack.push(s);
                stack.push(down);
            }
            _ => unknown = true,
        }
    }
    if unknown {
        Feasibility::Unknown
    } else {
        Feasibility::Infeasible
    }
}

/// Rational bound of column `col` in direction `upper` found by bisection:
/// `Err(())` when feasibility could not be decided, `Ok(None)` when the
/// column is unbounded in that direction (or the system is empty).
pub(crate) fn column_bound(f: &Flattened, col: usize, upper: bool) -> Result<Option<i64>, ()> {
    const LIMIT: i64 = 1 << 40;
    let probe = |m: i64| -> Result<bool, ()> {
        // feasible with x_col >= m (upper) or x_col <= m (lower)?
        let mut g = Flattened { n_cols: f.n_cols, rows: f.rows.clone(), trivially_false: f.trivially_false };
        let mut coeffs = vec![0i64; f.n_cols];
        coeffs[col] = 1;
        let row = if upper {
            Row { coeffs, lo: Some(m), hi: None }
        } else {
            Row { coeffs, lo: None, hi: Some(m) }
        };
        g.rows.push(row);
        match rational_feasible(&g) {
            Feasibility::Feasible => Ok(true),
            Feasibility::Infeasible => Ok(false),
            Feasibility::Unknown => Err(()),
        }
    };
    let sign = if upper { 1 } else { -1 };
    // Find a feasible start and an infeasible limit.
    if !probe(-sign * LIMIT)? {
        return Ok(None);
    }
    if probe(sign * LIMIT)? {
        return Ok(None);
    }
    // For `upper`: feasible at lo, infeasible at hi; the answer is the
    // largest feasible integer m.
    let (mut good, mut bad) = (-sign * LIMIT, sign * LIMIT);
    while (bad - good).abs() > 1 {
        let mid = good + (bad - good) / 2;
        if probe(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Some(good))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(coeffs: &[i64], c: i64) -> Constraint {
        Constraint::ge(AffineExpr::from_parts(coeffs.to_vec(), c))
    }

    #[test]
    fn interval_feasibility() {
        let cons = vec![ge(&[1], 0), ge(&[-1], 3)];
        let f = flatten(1, &cons);
        assert_eq!(integer_feasible(&f, 100), Feasibility::Feasible);
        let cons = vec![ge(&[1], -4), ge(&[-1], 3)];
        assert_eq!(integer_feasible(&flatten(1, &cons), 100), Feasibility::Infeasible);
    }

    #[test]
    fn integrality_matters() {
        // 1 <= 2x <= 1 has a rational but no integer solution.
        let cons = vec![ge(&[2], -1), ge(&[-2], 1)];
        let f = flatten(1, &cons);
        assert_eq!(rational_feasible(&f), Feasibility::Feasible);
        assert_eq!(integer_feasible(&f, 100), Feasibility::Infeasible);
    }

    #[test]
    fn floor_atoms_are_exact() {
        // floor(i/4) = 1 and i <= 3 is empty.
        let n = 1;
        let i = AffineExpr::var(n, 0);
        let cons = vec![
            Constraint::eq(i.floor_div(4).add_constant(-1)),
            Constraint::ge(i.neg().add_constant(3)),
        ];
        assert_eq!(integer_feasible(&flatten(n, &cons), 100), Feasibility::Infeasible);
    }
}
