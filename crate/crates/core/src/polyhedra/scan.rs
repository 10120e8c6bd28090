//! Explicit enumeration of the integer points of a polyhedron.
//!
//! Each level `k` scans dimension `k` between bounds derived from the exact
//! projection onto the first `k + 1` dimensions (with the outer values
//! substituted), falling back to a rational bounding box when a projection
//! could not be computed or a dimension only occurs inside floor terms.

use super::constraint::Constraint;
use super::error::PolyError;
use super::expr::AffineExpr;
use super::lp;
use super::poly::Polyhedron;

const MAX_POINTS: usize = 50_000_000;

pub(crate) struct Scanner {
    n: usize,
    /// `levels[k]`: constraints over the first `k + 1` dimensions.
    levels: Vec<Option<Vec<Constraint>>>,
    full: Vec<Constraint>,
    boxed: Vec<(i64, i64)>,
    empty: bool,
}

impl Scanner {
    pub fn new(p: &Polyhedron, names: &[String]) -> Result<Scanner, PolyError> {
        assert_eq!(p.n_ex, 0);
        let n = p.n_dim;
        if p.is_marked_empty() || p.is_empty() {
            return Ok(Scanner { n, levels: Vec::new(), full: Vec::new(), boxed: Vec::new(), empty: true });
        }
        let mut levels: Vec<Option<Vec<Constraint>>> = vec![None; n];
        let mut cur = Some(p.clone());
        for k in (0..n).rev() {
            if let Some(q) = &cur {
                levels[k] = Some(q.constraints().to_vec());
                if k > 0 {
                    let mut drop = vec![false; k + 1];
                    drop[k] = true;
                    let mut next = q.dims_to_existentials(&drop);
                    cur = next.eliminate_existentials().ok().map(|_| next);
                }
            }
        }
        let flat = lp::flatten(n, p.constraints());
        let mut boxed = Vec::with_capacity(n);
        for k in 0..n {
            let lo = lp::column_bound(&flat, k, false).map_err(|_| PolyError::Unbounded(names[k].clone()))?;
            let hi = lp::column_bound(&flat, k, true).map_err(|_| PolyError::Unbounded(names[k].clone()))?;
            match (lo, hi) {
                (Some(l), Some(h)) => boxed.push((l, h)),
                _ => return Err(PolyError::Unbounded(names[k].clone())),
            }
        }
        Ok(Scanner { n, levels, full: p.constraints().to_vec(), boxed, empty: false })
    }

    /// Calls `f` on every point in lexicographic order.
    pub fn for_each(&self, f: &mut dyn FnMut(&[i64])) -> Result<(), PolyError> {
        if self.empty {
            return Ok(());
        }
        if self.n == 0 {
            if self.full.iter().all(|c| c.holds(&[])) {
                f(&[]);
            }
            return Ok(());
        }
        let mut point = vec![0i64; self.n];
        let mut count = 0usize;
        self.rec(0, &mut point, f, &mut count)
    }

    fn rec(
        &self,
        k: usize,
        point: &mut Vec<i64>,
        f: &mut dyn FnMut(&[i64]),
        count: &mut usize,
    ) -> Result<(), PolyError> {
        let (mut lo, mut hi) = self.boxed[k];
        let cons: &[Constraint] = self.levels[k].as_deref().unwrap_or(&[]);
        // Tighten with constraints where dim k occurs only directly.
        for c in cons {
            let e = &c.expr;
            let a = e.coeffs[k];
            if a == 0 || e.var_in_divs(k) {
                continue;
            }
            let mut rest = e.clone();
            rest.coeffs[k] = 0;
            let r = rest.eval_prefix(point, k);
            if c.is_eq() {
                if r % a != 0 {
                    return Ok(());
                }
                let v = -r / a;
                lo = lo.max(v);
                hi = hi.min(v);
            } else if a > 0 {
                lo = lo.max((-r).div_euclid(a) + i64::from((-r).rem_euclid(a) != 0));
            } else {
                hi = hi.min(r.div_euclid(-a));
            }
        }
        let last = k + 1 == self.n;
        let mut v = lo;
        while v <= hi {
            point[k] = v;
            let ok = if last {
                self.full.iter().all(|c| c.holds(point))
            } else {
                cons.iter().all(|c| c.holds_prefix(point, k + 1))
            };
            if ok {
                if last {
                    *count += 1;
                    if *count > MAX_POINTS {
                        return Err(PolyError::Unbounded("too many points to enumerate".into()));
                    }
                    f(point);
                } else {
                    self.rec(k + 1, point, f, count)?;
                }
            }
            v += 1;
        }
        point[k] = 0;
        Ok(())
    }
}

impl AffineExpr {
    /// Evaluates an expression that only uses the first `k` variables.
    pub(crate) fn eval_prefix(&self, point: &[i64], k: usize) -> i64 {
        let mut tmp = point.to_vec();
        for x in tmp.iter_mut().skip(k) {
            *x = 0;
        }
        self.eval(&tmp)
    }
}

impl Constraint {
    /// Evaluates a constraint over the first `k` variables, treating it as
    /// satisfied when it mentions later ones.
    pub(crate) fn holds_prefix(&self, point: &[i64], k: usize) -> bool {
        if (k..self.expr.n_vars()).any(|j| self.expr.uses_var(j)) {
            return true;
        }
        self.holds(point)
    }
}

/// All points of a polyhedron in lexicographic order.
pub(crate) fn points(p: &Polyhedron, names: &[String]) -> Result<Vec<Vec<i64>>, PolyError> {
    let s = Scanner::new(p, names)?;
    let mut out = Vec::new();
    s.for_each(&mut |pt| out.push(pt.to_vec()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn anti_diagonal() {
        // { (i,j) : j = 3 - i, 0 <= i < 4 }
        let n = 2;
        let i = AffineExpr::var(n, 0);
        let j = AffineExpr::var(n, 1);
        let p = Polyhedron::from_constraints(
            n,
            vec![
                Constraint::eq(j.add(&i).add_constant(-3)),
                Constraint::ge(i.clone()),
                Constraint::ge(i.neg().add_constant(3)),
            ],
        );
        let pts = points(&p, &names(2)).unwrap();
        assert_eq!(pts, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
    }

    #[test]
    fn floor_only_dimension() {
        // { i : floor(i/4) = 2 }
        let n = 1;
        let i = AffineExpr::var(n, 0);
        let p = Polyhedron::from_constraints(n, vec![Constraint::eq(i.floor_div(4).add_constant(-2))]);
        let pts = points(&p, &names(1)).unwrap();
        assert_eq!(pts, (8..12).map(|v| vec![v]).collect::<Vec<_>>());
    }

    #[test]
    fn unbounded_is_reported() {
        let n = 1;
        let p = Polyhedron::from_constraints(n, vec![Constraint::ge(AffineExpr::var(n, 0))]);
        assert!(points(&p, &names(1)).is_err());
    }
}
